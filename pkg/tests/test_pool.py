from fpp_local.core.pool import chunked, run_jobs


def _square_all(indices: list[int]) -> list[int]:
    return [i * i for i in indices]


class TestChunked:
    def test_covers_every_index_once_in_order(self):
        chunks = chunked(range(23), 2)
        assert [i for c in chunks for i in c] == list(range(23))
        assert len(chunks) <= 8

    def test_empty(self):
        assert chunked([], 4) == []

    def test_fewer_indices_than_pieces(self):
        assert chunked(range(3), 4) == [[0], [1], [2]]


class TestRunJobs:
    def test_results_keep_job_order(self):
        jobs = chunked(range(40), 3)
        serial = run_jobs(_square_all, jobs, 1)
        parallel = run_jobs(_square_all, jobs, 3)
        assert serial == parallel
        assert [x for part in parallel for x in part] == [i * i for i in range(40)]
