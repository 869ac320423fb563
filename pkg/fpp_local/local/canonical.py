"""Canonical codes for small rooted coloured multigraphs.

A code is built in three passes:

1. pendant trees are folded into their attachment vertex, AHU style: a
   removed leaf contributes ``(edge label, sorted child codes)`` to its
   neighbour, so trees fold completely into the root;
2. the remaining core gets colour-refinement classes (root marked);
3. the core is labelled in BFS order from the root, branching only among
   candidates with the smallest entry, and the lexicographically smallest
   sequence of entries is kept.

Every entry records the vertex class, its folded label and its edges to
earlier vertices, so the code determines the graph, and the search space
does not depend on vertex numbering.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from fpp_local.core.errors import CapExceededError
from fpp_local.graph.fpp import TruncatedNeighbourhood
from fpp_local.stochastic.laws import WeightModel

VERTEX_CAP = 10**4
CODE_VERSION = "v1"


@dataclass(frozen=True)
class CanonicalCode:
    code: bytes
    weight_bins: int = 0
    bin_edges: tuple[float, ...] = ()

    def hex(self) -> str:
        return self.code.hex()


def weight_bin_edges(w: WeightModel, bins: int) -> tuple[float, ...]:
    """Interior edges of ``bins`` equiprobable bins of the weight law."""
    return tuple(float(x) for x in w.ppf(np.arange(1, bins) / bins))


def _edge_labels(
    g: TruncatedNeighbourhood, bins: int, w: WeightModel | None
) -> list[tuple[int, int]]:
    if bins == 0:
        return [(c, 0) for *_, c in g.edges]
    if w is None:
        raise ValueError("weight_bins > 0 needs the weight model")
    cdf = w.cdf(np.asarray(g.weights(), dtype=float))
    idx = np.minimum((cdf * bins).astype(np.int64), bins - 1)
    return [(c, int(b)) for (*_, c), b in zip(g.edges, idx.tolist(), strict=True)]


def _fold_pendant_trees(n: int, edges: list[tuple[int, int, tuple]], root: int):
    incident: list[list[tuple[int, tuple]]] = [[] for _ in range(n)]
    loops: list[list[tuple]] = [[] for _ in range(n)]
    deg = [0] * n
    for a, b, lab in edges:
        if a == b:
            loops[a].append(lab)
            deg[a] += 2
        else:
            incident[a].append((b, lab))
            incident[b].append((a, lab))
            deg[a] += 1
            deg[b] += 1

    folded: list[list[tuple]] = [[] for _ in range(n)]
    removed = [False] * n
    queue = deque(v for v in range(n) if v != root and deg[v] == 1)
    while queue:
        x = queue.popleft()
        if removed[x] or deg[x] != 1:
            continue
        removed[x] = True
        y, lab = next((y, lab) for y, lab in incident[x] if not removed[y])
        folded[y].append((lab, tuple(sorted(folded[x]))))
        deg[y] -= 1
        if y != root and deg[y] == 1:
            queue.append(y)

    labels = [(tuple(sorted(loops[v])), tuple(sorted(folded[v]))) for v in range(n)]
    core = [v for v in range(n) if not removed[v]]
    core_adj: dict[int, list[tuple[int, tuple]]] = {
        v: [(y, lab) for y, lab in incident[v] if not removed[y]] for v in core
    }
    return core, core_adj, labels


def _rank(signatures: dict[int, tuple]) -> dict[int, int]:
    index = {sig: i for i, sig in enumerate(sorted(set(signatures.values())))}
    return {v: index[sig] for v, sig in signatures.items()}


def _refine(core, core_adj, labels, root) -> dict[int, int]:
    colour = _rank({v: (int(v == root), labels[v]) for v in core})
    classes = len(set(colour.values()))
    for _ in range(len(core)):
        colour = _rank(
            {
                v: (colour[v], tuple(sorted((lab, colour[y]) for y, lab in core_adj[v])))
                for v in core
            }
        )
        new_classes = len(set(colour.values()))
        if new_classes == classes:
            break
        classes = new_classes
    return colour


def _search(core_adj, colour, labels, root) -> list[tuple]:
    def entry(x: int, pos: dict[int, int]) -> tuple:
        adj = tuple(sorted((pos[y], lab) for y, lab in core_adj[x] if y in pos))
        return (colour[x], labels[x], adj)

    best: list[tuple] | None = None
    stack = [([root], [(colour[root], labels[root], ())], 0)]
    while stack:
        order, entries, head = stack.pop()
        if best is not None and entries > best[: len(entries)]:
            continue
        pos = {v: i for i, v in enumerate(order)}
        while True:
            cands: list[int] = []
            while head < len(order):
                cands = sorted({y for y, _ in core_adj[order[head]] if y not in pos})
                if cands:
                    break
                head += 1
            if not cands:
                if best is None or entries < best:
                    best = entries
                break
            scored = [(entry(x, pos), x) for x in cands]
            low = min(e for e, _ in scored)
            if best is not None and entries + [low] > best[: len(entries) + 1]:
                break
            tied = [x for e, x in scored if e == low]
            for x in reversed(tied[1:]):
                stack.append((order + [x], entries + [low], head))
            x = tied[0]
            pos[x] = len(order)
            order = order + [x]
            entries = entries + [low]
    assert best is not None
    return best


def canonical_code(
    g: TruncatedNeighbourhood,
    weight_bins: int = 0,
    weights: WeightModel | None = None,
) -> CanonicalCode:
    """Code equal for two rooted coloured multigraphs iff they are isomorphic.

    With ``weight_bins == 0`` weights are ignored; otherwise every weight is
    replaced by its bin among ``weight_bins`` equiprobable bins of ``weights``.
    """
    if g.n_vertices > VERTEX_CAP:
        raise CapExceededError(f"{g.n_vertices} vertices exceed the canonical-code cap of {VERTEX_CAP}")
    labs = _edge_labels(g, weight_bins, weights)
    edges = [(a, b, lab) for (a, b, _, _), lab in zip(g.edges, labs, strict=True)]
    core, core_adj, labels = _fold_pendant_trees(g.n_vertices, edges, 0)
    colour = _refine(core, core_adj, labels, 0)
    best = _search(core_adj, colour, labels, 0)
    code = repr((CODE_VERSION, weight_bins, len(core), tuple(best))).encode()
    bin_edges = weight_bin_edges(weights, weight_bins) if weight_bins and weights else ()
    return CanonicalCode(code, weight_bins, bin_edges)


def is_isomorphic(
    g1: TruncatedNeighbourhood,
    g2: TruncatedNeighbourhood,
    weight_bins: int = 0,
    weights: WeightModel | None = None,
) -> bool:
    return canonical_code(g1, weight_bins, weights) == canonical_code(g2, weight_bins, weights)
