"""First passage percolation on a weighted multigraph: geodesics, colouring, truncation."""

import math
from collections import deque
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from fpp_local.core.rng import RngStream
from fpp_local.graph.config_graph import MultiGraph

BLACK = 0
RED = 1


@dataclass(frozen=True, eq=False)
class ShortestPathResult:
    source: int
    dist: np.ndarray
    # incoming edge on the shortest-path tree, -1 for the source and unreached vertices
    pred: np.ndarray
    parent: np.ndarray
    settled: int

    def reached(self, v: int) -> bool:
        return bool(np.isfinite(self.dist[v]))

    def path_edges(self, v: int) -> list[int]:
        """Edges from ``v`` back to the source; empty if unreached or ``v`` is the source."""
        if not self.reached(v):
            return []
        path = []
        while v != self.source:
            path.append(int(self.pred[v]))
            v = int(self.parent[v])
        return path


@dataclass(frozen=True, eq=False)
class GeodesicNeighbourhood:
    graph: MultiGraph
    root: int
    target: int
    red: frozenset[int]
    distance: float

    def colour(self, e: int) -> int:
        return RED if e in self.red else BLACK


@dataclass(frozen=True)
class TruncatedNeighbourhood:
    """Rooted coloured weighted multigraph with local vertex ids; the root is 0.

    ``edges`` holds ``(a, b, weight, colour)`` with local endpoints.
    """

    R: int
    n_vertices: int
    edges: tuple[tuple[int, int, float, int], ...]
    labels: tuple[int, ...] = ()
    hops: tuple[int, ...] = ()

    @property
    def red_count(self) -> int:
        return sum(1 for *_, c in self.edges if c == RED)

    @property
    def all_black(self) -> bool:
        return self.red_count == 0

    def red_weights(self) -> list[float]:
        return [w for _, _, w, c in self.edges if c == RED]

    def weights(self) -> list[float]:
        return [w for _, _, w, _ in self.edges]


def shortest_path_tree(
    g: MultiGraph, source: int, targets: set[int] | None = None
) -> ShortestPathResult:
    """Dijkstra from ``source`` with a binary heap.

    Heap entries are ordered by (distance, vertex id, edge id), so float ties
    resolve the same way on every run. With ``targets`` the search stops once
    all of them are settled; vertices not settled by then report +inf.
    """
    offsets, mate, owner, edge_of, weights = g.flat
    n = g.n
    dist = [math.inf] * n
    pred = [-1] * n
    parent = [-1] * n
    done = [False] * n
    remaining = set(targets) if targets else None
    dist[source] = 0.0
    heap: list[tuple[float, int, int, int]] = [(0.0, source, -1, -1)]
    settled = 0
    while heap:
        d, v, e, p = heappop(heap)
        if done[v]:
            continue
        done[v] = True
        dist[v], pred[v], parent[v] = d, e, p
        settled += 1
        if remaining is not None:
            remaining.discard(v)
            if not remaining:
                break
        for h in range(offsets[v], offsets[v + 1]):
            x = owner[mate[h]]
            if done[x]:
                continue
            f = edge_of[h]
            nd = d + weights[f]
            if nd <= dist[x]:
                dist[x] = nd
                heappush(heap, (nd, x, f, v))

    dist_arr = np.asarray(dist)
    done_arr = np.asarray(done, dtype=bool)
    dist_arr[~done_arr] = math.inf
    pred_arr = np.where(done_arr, np.asarray(pred), -1)
    parent_arr = np.where(done_arr, np.asarray(parent), -1)
    return ShortestPathResult(source, dist_arr, pred_arr, parent_arr, settled)


def colour_geodesic(g: MultiGraph, o: int, u: int) -> GeodesicNeighbourhood:
    """Colour the o-u geodesic red; all-black if o == u or u is unreachable."""
    if o == u:
        return GeodesicNeighbourhood(g, o, u, frozenset(), 0.0)
    sp = shortest_path_tree(g, o, targets={u})
    if not sp.reached(u):
        return GeodesicNeighbourhood(g, o, u, frozenset(), math.inf)
    return GeodesicNeighbourhood(g, o, u, frozenset(sp.path_edges(u)), float(sp.dist[u]))


def truncate(nb: GeodesicNeighbourhood, R: int) -> TruncatedNeighbourhood:
    """Keep vertices within hop distance R of the root and every edge between them."""
    g = nb.graph
    offsets, mate, owner, edge_of, weights = g.flat
    local = {nb.root: 0}
    labels = [nb.root]
    hops = [0]
    queue = deque([nb.root])
    while queue:
        v = queue.popleft()
        hv = hops[local[v]]
        if hv == R:
            continue
        for h in range(offsets[v], offsets[v + 1]):
            x = owner[mate[h]]
            if x not in local:
                local[x] = len(labels)
                labels.append(x)
                hops.append(hv + 1)
                queue.append(x)

    edges = []
    lower = g.lower_half
    for v in labels:
        for h in range(offsets[v], offsets[v + 1]):
            e = edge_of[h]
            if lower[e] != h:
                continue
            x = owner[mate[h]]
            if x in local:
                edges.append((local[v], local[x], weights[e], nb.colour(e)))
    return TruncatedNeighbourhood(R, len(labels), tuple(edges), tuple(labels), tuple(hops))


def sample_geodesic_neighbourhood(
    g: MultiGraph, R: int, rng: RngStream
) -> TruncatedNeighbourhood:
    """Uniform root o, independent uniform target u, geodesic coloured, truncated at R."""
    if g.n < 1:
        raise ValueError("graph has no vertices")
    o = rng.integer(g.n)
    u = rng.integer(g.n)
    return truncate(colour_geodesic(g, o, u), R)
