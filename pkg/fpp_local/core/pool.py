import logging
import os
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

J = TypeVar("J")
R = TypeVar("R")


def chunked(indices: Sequence[int], workers: int) -> list[list[int]]:
    """Split replica indices into contiguous chunks, a few per worker."""
    if not indices:
        return []
    pieces = max(1, min(len(indices), 4 * max(1, workers)))
    size = -(-len(indices) // pieces)
    return [list(indices[i : i + size]) for i in range(0, len(indices), size)]


def run_jobs(task: Callable[[J], R], jobs: Iterable[J], workers: int = 1) -> list[R]:
    """Run ``task`` over ``jobs`` and return results in job order.

    Each job carries its own replica indices and derives its random streams
    from them, so the result does not depend on the worker count.
    """
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [task(job) for job in jobs]
    workers = min(workers, len(jobs), os.cpu_count() or 1)
    logger.debug("dispatching %d jobs to %d workers", len(jobs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, jobs))
