import math

import numpy as np
import pytest
from scipy import stats

from fpp_local.core.rng import RngStream
from fpp_local.graph.config_graph import (
    DegreeSequence,
    assign_weights,
    configuration_graph,
    dump_edge_list,
    from_edge_list,
    load_edge_list,
    multigraph_stats,
    pair_half_edges,
    sample_degree_sequence,
)
from fpp_local.stochastic.laws import DegreeModel, WeightModel


class TestDegreeSequence:
    def test_odd_total_gets_one_extra_half_edge(self, rng):
        seq = sample_degree_sequence(3, DegreeModel.deterministic(3), rng)
        assert seq.total == 10
        assert seq.fixup_vertex is not None
        assert seq.degrees[seq.fixup_vertex] == 4

    def test_even_total_untouched(self, rng):
        seq = sample_degree_sequence(4, DegreeModel.deterministic(3), rng)
        assert seq.fixup_vertex is None
        assert seq.degrees.tolist() == [3, 3, 3, 3]

    def test_rejects_empty(self, rng):
        with pytest.raises(ValueError):
            sample_degree_sequence(0, DegreeModel.deterministic(3), rng)

    def test_histogram_matches_the_law(self, rng):
        d = DegreeModel.from_atoms({1: 0.2, 2: 0.3, 5: 0.4, 9: 0.1})
        seq = sample_degree_sequence(100_000, d, rng)
        degrees = seq.degrees
        if seq.fixup_vertex is not None:
            degrees = np.delete(degrees, seq.fixup_vertex)
        observed = np.array([(degrees == k).sum() for k in d.values])
        assert observed.sum() == len(degrees)
        expected = d.probs * len(degrees)
        assert stats.chisquare(observed, expected).pvalue > 0.01


class TestPairing:
    def test_mate_is_a_fixed_point_free_involution(self, rng):
        seq = sample_degree_sequence(500, DegreeModel.from_atoms({1: 0.3, 2: 0.3, 5: 0.4}), rng)
        g = pair_half_edges(seq, rng)
        h = np.arange(seq.total)
        assert (g.mate[g.mate] == h).all()
        assert (g.mate != h).all()
        assert g.m == seq.total // 2
        assert (g.edges[:, 0] < g.edges[:, 1]).all()

    def test_odd_total_rejected(self, rng):
        with pytest.raises(ValueError, match="odd"):
            pair_half_edges(DegreeSequence(np.array([1, 2])), rng)

    def test_two_vertices_of_degree_two(self):
        """Of the three matchings of d = (2, 2), two give a double edge."""
        draws = 100_000
        seq = DegreeSequence(np.array([2, 2]))
        stream = RngStream(3, (0,))
        double = 0
        for _ in range(draws):
            g = pair_half_edges(seq, stream)
            double += multigraph_stats(g)["self_loops"] == 0
        p = double / draws
        se = math.sqrt((2 / 3) * (1 / 3) / draws)
        assert abs(p - 2 / 3) < 3 * se

    def test_one_weight_per_edge(self, rng):
        seq = sample_degree_sequence(300, DegreeModel.deterministic(3), rng)
        g = assign_weights(pair_half_edges(seq, rng), WeightModel.uniform(1.0, 2.0), rng)
        assert len(g.weights) == g.m
        assert ((g.weights >= 1.0) & (g.weights < 2.0)).all()

    @pytest.mark.parametrize(
        "w",
        [WeightModel.exponential(2.0), WeightModel.uniform(1.0, 2.0), WeightModel.weibull(0.7, 1.5)],
        ids=["exponential", "uniform", "weibull"],
    )
    def test_weights_follow_the_law(self, w, rng):
        seq = sample_degree_sequence(70_000, DegreeModel.deterministic(3), rng)
        g = assign_weights(pair_half_edges(seq, rng), w, rng)
        assert g.m >= 100_000
        assert stats.kstest(g.weights, w.cdf).pvalue > 0.01

    def test_same_stream_same_graph(self):
        d, w = DegreeModel.deterministic(3), WeightModel.exponential(1.0)
        g1 = configuration_graph(200, d, w, RngStream(5, (1,)))
        g2 = configuration_graph(200, d, w, RngStream(5, (1,)))
        assert (g1.mate == g2.mate).all()
        assert (g1.weights == g2.weights).all()


class TestMultiGraph:
    def test_stats_count_loops_and_surplus_edges(self):
        g = from_edge_list(3, [(0, 0), (0, 1), (0, 1), (1, 2)], [1.0, 1.0, 1.0, 1.0])
        assert multigraph_stats(g) == {"self_loops": 1, "parallel_surplus": 1}
        assert g.degrees.tolist() == [4, 3, 1]

    def test_self_loop_listed_twice(self):
        g = from_edge_list(2, [(0, 0), (0, 1)], [0.5, 2.0])
        nbrs = sorted(g.neighbours(0))
        assert nbrs == [(0, 0.5, 0), (0, 0.5, 0), (1, 2.0, 1)]

    def test_few_loops_and_multi_edges(self):
        g = configuration_graph(
            10_000, DegreeModel.deterministic(3), WeightModel.exponential(1.0), RngStream(11)
        )
        stats = multigraph_stats(g)
        assert stats["self_loops"] + stats["parallel_surplus"] < 30

    def test_edge_list_round_trip(self, tmp_path):
        g = configuration_graph(
            50, DegreeModel.from_atoms({1: 0.5, 3: 0.5}), WeightModel.uniform(0.0, 1.0), RngStream(2)
        )
        path = tmp_path / "g.txt"
        dump_edge_list(g, path)
        h = load_edge_list(path)
        assert h.n == g.n
        assert h.seed == g.seed
        assert (h.endpoints == g.endpoints).all()
        assert h.weights.tolist() == g.weights.tolist()
        assert path.read_text().splitlines()[0] == f"{g.n} {g.m} {g.seed}"
