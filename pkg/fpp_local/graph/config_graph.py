"""Configuration multigraphs built by uniform pairing of half-edges."""

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from fpp_local.core.rng import RngStream
from fpp_local.stochastic.laws import DegreeModel, WeightModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    degrees: np.ndarray
    # vertex that received one extra half-edge to make the total even
    fixup_vertex: int | None = None

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def total(self) -> int:
        return int(self.degrees.sum())


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Weighted multigraph stored by half-edges.

    Half-edges of vertex ``v`` are ``offsets[v] .. offsets[v + 1] - 1``.
    ``mate`` is the pairing involution and ``edges[e]`` holds the two
    half-edges of edge ``e``. Self-loops and parallel edges are kept.
    """

    degrees: np.ndarray
    offsets: np.ndarray
    mate: np.ndarray
    edges: np.ndarray
    weights: np.ndarray | None = None
    seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def owner(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)

    @cached_property
    def edge_of(self) -> np.ndarray:
        edge_of = np.empty(len(self.mate), dtype=np.int64)
        ids = np.arange(self.m, dtype=np.int64)
        edge_of[self.edges[:, 0]] = ids
        edge_of[self.edges[:, 1]] = ids
        return edge_of

    @cached_property
    def endpoints(self) -> np.ndarray:
        """(m, 2) array of vertex endpoints per edge."""
        return self.owner[self.edges] if self.m else np.empty((0, 2), dtype=np.int64)

    @cached_property
    def flat(self) -> tuple[list[int], list[int], list[int], list[int], list[float]]:
        """Plain-list views (offsets, mate, owner, edge_of, weights) for hot loops."""
        if self.weights is None:
            raise ValueError("graph has no weights; call assign_weights first")
        return (
            self.offsets.tolist(),
            self.mate.tolist(),
            self.owner.tolist(),
            self.edge_of.tolist(),
            self.weights.tolist(),
        )

    @cached_property
    def lower_half(self) -> list[int]:
        """First half-edge of every edge; used to visit each edge once."""
        return self.edges[:, 0].tolist()

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def neighbours(self, v: int) -> list[tuple[int, float, int]]:
        """(neighbour, weight, edge id) per half-edge of ``v``; a self-loop appears twice."""
        offsets, mate, owner, edge_of, weights = self.flat
        out = []
        for h in range(offsets[v], offsets[v + 1]):
            e = edge_of[h]
            out.append((owner[mate[h]], weights[e], e))
        return out


def sample_degree_sequence(n: int, d: DegreeModel, rng: RngStream) -> DegreeSequence:
    """n i.i.d. degrees; an odd total is fixed by adding a half-edge to a uniform vertex."""
    if n < 1:
        raise ValueError("n must be at least 1")
    degrees = d.sample(n, rng).astype(np.int64)
    fixup = None
    if degrees.sum() % 2:
        fixup = rng.integer(n)
        degrees[fixup] += 1
        logger.debug("odd degree total, added a half-edge to vertex %d", fixup)
    return DegreeSequence(degrees, fixup)


def pair_half_edges(seq: DegreeSequence, rng: RngStream) -> MultiGraph:
    """Uniform perfect matching of the half-edges.

    Pairing consecutive entries of a uniform random permutation gives every
    one of the (l-1)!! matchings the same probability.
    """
    total = seq.total
    if total % 2:
        raise ValueError(f"odd number of half-edges ({total})")
    degrees = np.asarray(seq.degrees, dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(degrees))).astype(np.int64)
    perm = rng.gen.permutation(total).astype(np.int64)
    a, b = perm[0::2], perm[1::2]
    mate = np.empty(total, dtype=np.int64)
    mate[a] = b
    mate[b] = a
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    order = np.argsort(lo, kind="stable")
    edges = np.stack([lo[order], hi[order]], axis=1) if total else np.empty((0, 2), dtype=np.int64)
    return MultiGraph(degrees, offsets, mate, edges, seed=rng.seed)


def assign_weights(g: MultiGraph, w: WeightModel, rng: RngStream) -> MultiGraph:
    """Attach one independent weight per edge (self-loops and parallel edges included)."""
    return replace(g, weights=w.sample(g.m, rng))


def configuration_graph(
    n: int, d: DegreeModel, w: WeightModel, rng: RngStream
) -> MultiGraph:
    """Degree sequence, pairing and weights from three sub-streams of ``rng``."""
    seq = sample_degree_sequence(n, d, rng.spawn(0))
    g = pair_half_edges(seq, rng.spawn(1))
    return assign_weights(g, w, rng.spawn(2))


def multigraph_stats(g: MultiGraph) -> dict[str, int]:
    ends = g.endpoints
    loops = int((ends[:, 0] == ends[:, 1]).sum()) if g.m else 0
    proper = ends[ends[:, 0] != ends[:, 1]] if g.m else ends
    pairs = np.sort(proper, axis=1)
    distinct = len(np.unique(pairs, axis=0)) if len(pairs) else 0
    return {"self_loops": loops, "parallel_surplus": len(pairs) - distinct}


def dump_edge_list(g: MultiGraph, path: str | Path) -> None:
    """Write "n m seed" followed by one "u v weight" line per edge."""
    if g.weights is None:
        raise ValueError("graph has no weights")
    ends = g.endpoints
    lines = [f"{g.n} {g.m} {g.seed if g.seed is not None else -1}"]
    lines += [f"{u} {v} {w!r}" for (u, v), w in zip(ends.tolist(), g.weights.tolist(), strict=True)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def from_edge_list(
    n: int,
    ends: list[tuple[int, int]] | np.ndarray,
    weights: list[float] | np.ndarray | None = None,
    seed: int | None = None,
) -> MultiGraph:
    """MultiGraph with the given vertex pairs as edges, in order."""
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    m = len(ends)
    degrees = np.bincount(ends.ravel(), minlength=n).astype(np.int64)
    offsets = np.concatenate(([0], np.cumsum(degrees))).astype(np.int64)
    cursor = offsets[:-1].copy()
    edges = np.empty((m, 2), dtype=np.int64)
    for i, (u, v) in enumerate(ends.tolist()):
        edges[i, 0] = cursor[u]
        cursor[u] += 1
        edges[i, 1] = cursor[v]
        cursor[v] += 1
    mate = np.empty(int(degrees.sum()), dtype=np.int64)
    mate[edges[:, 0]] = edges[:, 1]
    mate[edges[:, 1]] = edges[:, 0]
    w = None if weights is None else np.asarray(weights, dtype=float)
    return MultiGraph(degrees, offsets, mate, edges, w, seed)


def load_edge_list(path: str | Path) -> MultiGraph:
    rows = Path(path).read_text(encoding="utf-8").split("\n")
    n, m, seed = (int(x) for x in rows[0].split())
    ends = []
    weights = []
    for row in rows[1 : m + 1]:
        u, v, w = row.split()
        ends.append((int(u), int(v)))
        weights.append(float(w))
    return from_edge_list(n, ends, weights, None if seed < 0 else seed)
