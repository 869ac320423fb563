"""Local convergence experiments: coloured R-neighbourhoods of G_n against the limit tree."""

import logging
import math
import time
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import asdict, dataclass, field, replace

from scipy import stats

from fpp_local.core import rng as streams
from fpp_local.core.errors import CapExceededError
from fpp_local.core.models import ExperimentConfig
from fpp_local.core.pool import chunked, run_jobs
from fpp_local.core.rng import RngStream
from fpp_local.graph.config_graph import MultiGraph, configuration_graph
from fpp_local.graph.fpp import BLACK, TruncatedNeighbourhood, sample_geodesic_neighbourhood
from fpp_local.limit.tree import (
    ColouredLimitTree,
    LimitParams,
    sample_coloured_limit_tree,
)
from fpp_local.local.canonical import CODE_VERSION, canonical_code
from fpp_local.local.histogram import (
    CodeHistogram,
    tv_bootstrap_se,
    tv_distance,
    tv_null,
)
from fpp_local.stochastic.laws import (
    DegreeModel,
    WeightModel,
    malthusian_lambda,
    size_biased,
    survival_probs,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("n", "samples", "tv", "tv_se", "black_frac", "black_frac_expected", "ks_weights")


@dataclass
class SideSample:
    """Everything one side of the comparison records per sampled neighbourhood."""

    histogram: CodeHistogram = field(default_factory=CodeHistogram)
    black: int = 0
    red_lengths: Counter = field(default_factory=Counter)
    red_weights: list[float] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)

    @property
    def samples(self) -> int:
        return self.histogram.total

    @property
    def black_frac(self) -> float:
        return self.black / self.samples if self.samples else math.nan

    def record(self, nb: TruncatedNeighbourhood, code: bytes) -> None:
        self.histogram.add(code)
        self.black += nb.all_black
        self.red_lengths[nb.red_count] += 1
        self.red_weights.extend(nb.red_weights())
        self.weights.extend(nb.weights())

    def merge(self, other: "SideSample") -> "SideSample":
        return SideSample(
            self.histogram.merge(other.histogram),
            self.black + other.black,
            self.red_lengths + other.red_lengths,
            self.red_weights + other.red_weights,
            self.weights + other.weights,
        )

    def red_length_distribution(self) -> dict[int, float]:
        total = self.samples
        return {k: self.red_lengths[k] / total for k in sorted(self.red_lengths)}


def neighbourhood_code(
    nb: TruncatedNeighbourhood, config: ExperimentConfig, w: WeightModel
) -> bytes:
    if config.ignore_colour:
        nb = replace(nb, edges=tuple((a, b, x, BLACK) for a, b, x, _ in nb.edges))
    return canonical_code(nb, config.weight_bins, w).code


def limit_params(config: ExperimentConfig, d: DegreeModel, w: WeightModel) -> LimitParams:
    off = size_biased(d)
    zeta = survival_probs(off, d, config.tol).zeta
    lam = malthusian_lambda(off, w, config.tol) if config.regime == "malthusian" else None
    return LimitParams(zeta, lam, config.horizon, config.budget, config.node_cap)


def graph_plan(samples: int, per_graph: int) -> list[tuple[int, int]]:
    """(graph index, pairs on that graph) so that the pairs add up to ``samples``."""
    graphs = -(-samples // per_graph)
    return [(k, min(per_graph, samples - k * per_graph)) for k in range(graphs)]


def iter_graph_neighbourhoods(
    config: ExperimentConfig, n: int, plan: list[tuple[int, int]], tag: int = 0
) -> Iterator[tuple[int, MultiGraph, TruncatedNeighbourhood]]:
    d, w = config.degree_model(), config.weight_model()
    for k, pairs in plan:
        g = configuration_graph(n, d, w, RngStream(config.seed, (streams.GRAPH, tag, n, k)))
        pair_rng = RngStream(config.seed, (streams.PAIRS, tag, n, k))
        for _ in range(pairs):
            yield k, g, sample_geodesic_neighbourhood(g, config.radius, pair_rng)


def iter_limit_trees(
    config: ExperimentConfig, indices: Iterable[int], params: LimitParams, tag: int = 0
) -> Iterator[tuple[int, ColouredLimitTree]]:
    d, w = config.degree_model(), config.weight_model()
    off = size_biased(d)
    for i in indices:
        rng = RngStream(config.seed, (streams.LIMIT, tag, i))
        yield i, sample_coloured_limit_tree(config.regime, d, off, w, config.radius, params, rng)


def _graph_job(job: tuple) -> SideSample:
    config, n, plan, tag = job
    w = config.weight_model()
    out = SideSample()
    for _, _, nb in iter_graph_neighbourhoods(config, n, plan, tag):
        out.record(nb, neighbourhood_code(nb, config, w))
    return out


def _limit_job(job: tuple) -> SideSample:
    config, indices, params, tag = job
    w = config.weight_model()
    out = SideSample()
    for _, ct in iter_limit_trees(config, indices, params, tag):
        nb = ct.rooted()
        out.record(nb, neighbourhood_code(nb, config, w))
    return out


def _merge_all(parts: list[SideSample]) -> SideSample:
    out = SideSample()
    for part in parts:
        out = out.merge(part)
    return out


def sample_graph_side(
    config: ExperimentConfig, n: int, samples: int | None = None, tag: int = 0
) -> SideSample:
    """Coloured R-neighbourhoods of uniform roots in configuration graphs on n vertices."""
    plan = graph_plan(samples or config.samples, config.pairs_per_graph)
    jobs = [
        (config, n, [plan[i] for i in chunk], tag)
        for chunk in chunked(range(len(plan)), config.workers)
    ]
    side = _merge_all(run_jobs(_graph_job, jobs, config.workers))
    side.histogram.meta = {"n": n, "R": config.radius, "regime": config.regime, "seed": config.seed}
    return side


def sample_limit_side(
    config: ExperimentConfig,
    samples: int | None = None,
    tag: int = 0,
    params: LimitParams | None = None,
) -> SideSample:
    """Coloured R-truncations of independent limit trees."""
    if params is None:
        params = limit_params(config, config.degree_model(), config.weight_model())
    jobs = [
        (config, chunk, params, tag)
        for chunk in chunked(range(samples or config.samples), config.workers)
    ]
    side = _merge_all(run_jobs(_limit_job, jobs, config.workers))
    side.histogram.meta = {"n": "limit", "R": config.radius, "regime": config.regime, "seed": config.seed}
    return side


def _ks(a: list[float], b: list[float]) -> float:
    if not a or not b:
        return math.nan
    return float(stats.ks_2samp(a, b).statistic)


@dataclass
class ConvergenceRow:
    n: int
    samples: int
    tv: float
    tv_se: float
    black_frac: float
    black_frac_expected: float
    ks_weights: float
    tv_null: float
    tv_null_sd: float
    ks_all_weights: float
    red_lengths: dict[int, float]

    def csv_values(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]
    limit: SideSample
    graphs: dict[int, SideSample]
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "meta": self.meta,
            "limit": {
                "samples": self.limit.samples,
                "black_frac": self.limit.black_frac,
                "red_lengths": self.limit.red_length_distribution(),
            },
            "rows": [asdict(r) for r in self.rows],
        }


def compare(
    config: ExperimentConfig, n: int, graph: SideSample, limit: SideSample, zeta: float
) -> ConvergenceRow:
    h1, h2 = graph.histogram, limit.histogram
    null_mean, null_sd = tv_null(h1, h2, RngStream(config.seed, (streams.BOOTSTRAP, n, 1)), config.bootstrap)
    return ConvergenceRow(
        n=n,
        samples=graph.samples,
        tv=tv_distance(h1, h2),
        tv_se=tv_bootstrap_se(h1, h2, RngStream(config.seed, (streams.BOOTSTRAP, n, 0)), config.bootstrap),
        black_frac=graph.black_frac,
        black_frac_expected=1.0 - zeta**2,
        ks_weights=_ks(graph.red_weights, limit.red_weights),
        tv_null=null_mean,
        tv_null_sd=null_sd,
        ks_all_weights=_ks(graph.weights, limit.weights),
        red_lengths=graph.red_length_distribution(),
    )


def convergence_report(config: ExperimentConfig) -> ConvergenceReport:
    """TV between graph-side and limit-side code histograms for every n of the grid.

    The limit side does not depend on n and is sampled once. With
    ``max_seconds`` set, the wall clock is checked after every sampled side
    and the report is abandoned once it runs out.
    """
    start = time.monotonic()

    def check_clock(stage: str) -> None:
        if config.max_seconds is not None and time.monotonic() - start > config.max_seconds:
            raise CapExceededError(f"wall-clock cap of {config.max_seconds}s reached after {stage}")

    d, w = config.degree_model(), config.weight_model()
    params = limit_params(config, d, w)
    logger.info("sampling %d limit trees (%s regime)", config.samples, config.regime)
    limit = sample_limit_side(config, params=params)
    check_clock("the limit side")

    rows: list[ConvergenceRow] = []
    graphs: dict[int, SideSample] = {}
    for n in config.n_grid:
        logger.info("sampling %d neighbourhoods at n=%d", config.samples, n)
        graphs[n] = sample_graph_side(config, n)
        check_clock(f"n={n}")
        rows.append(compare(config, n, graphs[n], limit, params.zeta))
        logger.info("n=%d tv=%.4f (se %.4f, null %.4f)", n, rows[-1].tv, rows[-1].tv_se, rows[-1].tv_null)

    meta = {
        "config": config.model_dump(mode="json", by_alias=True),
        "zeta": params.zeta,
        "lambda": params.lam,
        "code_version": CODE_VERSION,
    }
    return ConvergenceReport(rows, limit, graphs, meta)
