"""Giant component size and typical FPP distances on configuration graphs."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from fpp_local.core import rng as streams
from fpp_local.core.pool import chunked, run_jobs
from fpp_local.core.rng import RngStream
from fpp_local.graph.config_graph import MultiGraph, configuration_graph
from fpp_local.graph.fpp import shortest_path_tree
from fpp_local.stochastic.laws import (
    DegreeModel,
    WeightModel,
    malthusian_lambda,
    size_biased,
    survival_probs,
)

logger = logging.getLogger(__name__)


def giant_component_mask(g: MultiGraph) -> np.ndarray:
    if g.m == 0:
        mask = np.zeros(g.n, dtype=bool)
        mask[0] = True
        return mask
    ends = g.endpoints
    adj = sparse.coo_matrix(
        (np.ones(g.m), (ends[:, 0], ends[:, 1])), shape=(g.n, g.n)
    ).tocsr()
    _, labels = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    return labels == int(np.argmax(sizes))


def giant_component_fraction(g: MultiGraph) -> float:
    return float(giant_component_mask(g).sum()) / g.n


def typical_distance(g: MultiGraph, pairs: int, rng: RngStream) -> list[float]:
    """FPP distances between independent uniform pairs of giant-component vertices."""
    giant = np.flatnonzero(giant_component_mask(g))
    out = []
    for _ in range(pairs):
        o = int(giant[rng.integer(len(giant))])
        u = int(giant[rng.integer(len(giant))])
        sp = shortest_path_tree(g, o, targets={u})
        out.append(float(sp.dist[u]))
    return out


@dataclass
class ScalingRow:
    n: int
    graphs: int
    pairs: int
    mean_distance: float
    distance_se: float
    giant_frac: float
    giant_frac_expected: float


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    slope: float
    intercept: float
    target_slope: float
    meta: dict = field(default_factory=dict)

    @property
    def relative_slope_error(self) -> float:
        return abs(self.slope - self.target_slope) / self.target_slope


def _scaling_job(job: tuple) -> tuple[list[float], list[float]]:
    d, w, n, indices, pairs, seed = job
    distances, fractions = [], []
    for k in indices:
        root = RngStream(seed, (streams.SCALING, n, k))
        g = configuration_graph(n, d, w, root.spawn(0))
        fractions.append(giant_component_fraction(g))
        distances.extend(typical_distance(g, pairs, root.spawn(1)))
    return distances, fractions


def distance_scaling(
    d: DegreeModel,
    w: WeightModel,
    n_grid: list[int],
    graphs: int,
    pairs: int,
    seed: int,
    workers: int = 1,
) -> ScalingReport:
    """Mean typical distance per n and its least-squares slope against log n.

    For regular supercritical laws the slope approaches 1/lambda.
    """
    lam = malthusian_lambda(size_biased(d), w)
    zeta = survival_probs(size_biased(d), d).zeta
    rows = []
    for n in n_grid:
        jobs = [(d, w, n, chunk, pairs, seed) for chunk in chunked(range(graphs), workers)]
        distances: list[float] = []
        fractions: list[float] = []
        for dist_part, frac_part in run_jobs(_scaling_job, jobs, workers):
            distances.extend(dist_part)
            fractions.extend(frac_part)
        arr = np.asarray(distances)
        rows.append(
            ScalingRow(
                n=n,
                graphs=graphs,
                pairs=len(arr),
                mean_distance=float(arr.mean()),
                distance_se=float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else math.nan,
                giant_frac=float(np.mean(fractions)),
                giant_frac_expected=zeta,
            )
        )
        logger.info("n=%d mean distance %.4f", n, rows[-1].mean_distance)
    if len(rows) >= 2:
        slope, intercept = np.polyfit(np.log([r.n for r in rows]), [r.mean_distance for r in rows], 1)
    else:
        slope, intercept = math.nan, math.nan
    return ScalingReport(rows, float(slope), float(intercept), 1.0 / lam, {"lambda": lam, "zeta": zeta})
