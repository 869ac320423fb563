import logging
import time
from dataclasses import dataclass
from typing import Literal

from fpp_local.core import rng as streams
from fpp_local.core.models import ExperimentConfig
from fpp_local.core.pool import chunked, run_jobs
from fpp_local.core.rng import RngStream
from fpp_local.exploration.process import (
    ConfigGraphView,
    ExpandableGraph,
    ExplorationState,
    LimitTreeView,
    explore_step,
    explored_subgraph,
    init_exploration,
    trace_row,
)
from fpp_local.graph.config_graph import configuration_graph
from fpp_local.limit.tree import LimitTree
from fpp_local.local.canonical import canonical_code
from fpp_local.local.histogram import CodeHistogram, tv_distance
from fpp_local.stochastic.laws import size_biased

logger = logging.getLogger(__name__)

Target = Literal["graph", "limit"]

TRACE_COLUMNS = (
    "replica",
    "N",
    "v_star",
    "d_star",
    "active",
    "type_i",
    "type_ii",
    "type_iii",
    "type_iv",
    "in_branch_window",
    "off_branch",
)


def trace_exploration(
    g: ExpandableGraph,
    R: int,
    eps: float,
    steps: int,
    ties: RngStream,
    max_seconds: float | None = None,
) -> tuple[ExplorationState, list[dict]]:
    """Run ``steps`` exploration steps and record a trace row after each one."""
    s = init_exploration(g, R, ties)
    rows = []
    start = time.monotonic()
    for _ in range(steps):
        if max_seconds is not None and time.monotonic() - start > max_seconds:
            s.capped = True
            logger.warning("trace stopped at N=%d by the wall-clock cap", s.N)
            break
        explore_step(s)
        rows.append(trace_row(s, eps))
    return s, rows


def _views(config: ExperimentConfig, target: Target, n: int, k: int):
    """Exploration targets hosted by replica ``k``: one per root on a graph, one per tree."""
    d, w = config.degree_model(), config.weight_model()
    root = RngStream(config.seed, (streams.EXPLORE, int(target == "limit"), n, k))
    if target == "limit":
        t = LimitTree(d, size_biased(d), w, root.spawn(0), node_cap=config.node_cap)
        return [LimitTreeView(t)], root.spawn(1)
    g = configuration_graph(n, d, w, root.spawn(0))
    roots = root.spawn(2)
    return [ConfigGraphView(g, roots.integer(g.n)) for _ in range(config.pairs_per_graph)], root.spawn(1)


@dataclass
class TraceSet:
    rows: list[dict]
    # explorations stopped early by the wall-clock cap
    capped: int = 0


def _trace_job(job: tuple) -> TraceSet:
    config, target, n, indices = job
    out = TraceSet([])
    for k in indices:
        views, ties = _views(config, target, n, k)
        for j, view in enumerate(views):
            s, rows = trace_exploration(
                view, config.radius, config.eps, config.explore_steps, ties, config.max_seconds
            )
            replica = k * len(views) + j
            out.rows.extend({"replica": replica, **row} for row in rows)
            out.capped += s.capped
    return out


def exploration_traces(
    config: ExperimentConfig, target: Target, replicas: int, n: int | None = None
) -> TraceSet:
    """Trace rows of ``replicas`` host replicas (graphs host ``pairs_per_graph`` roots each)."""
    n = n or config.n_grid[0]
    jobs = [(config, target, n, chunk) for chunk in chunked(range(replicas), config.workers)]
    traces = TraceSet([])
    for part in run_jobs(_trace_job, jobs, config.workers):
        traces.rows.extend(part.rows)
        traces.capped += part.capped
    return traces


def _coupling_job(job: tuple) -> CodeHistogram:
    config, target, n, indices, steps = job
    h = CodeHistogram()
    for k in indices:
        views, ties = _views(config, target, n, k)
        for view in views:
            s = init_exploration(view, config.radius, ties)
            for _ in range(steps):
                explore_step(s)
            h.add(canonical_code(explored_subgraph(s)).code)
    return h


@dataclass
class CouplingResult:
    n: int
    steps: int
    graph: CodeHistogram
    limit: CodeHistogram

    @property
    def tv(self) -> float:
        return tv_distance(self.graph, self.limit)


def exploration_coupling(
    config: ExperimentConfig, n: int, steps: int, samples: int
) -> CouplingResult:
    """Histograms of explored subgraphs G(N) after ``steps`` steps on G_n and on the limit tree."""
    hists = {}
    for target in ("graph", "limit"):
        hosts = samples if target == "limit" else -(-samples // config.pairs_per_graph)
        jobs = [(config, target, n, chunk, steps) for chunk in chunked(range(hosts), config.workers)]
        h = CodeHistogram(meta={"n": n if target == "graph" else "limit", "steps": steps})
        for part in run_jobs(_coupling_job, jobs, config.workers):
            h = h.merge(part)
        hists[target] = h
    return CouplingResult(n, steps, hists["graph"], hists["limit"])
