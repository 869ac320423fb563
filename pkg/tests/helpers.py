from fpp_local.exploration.process import LimitTreeView
from fpp_local.graph.fpp import TruncatedNeighbourhood
from fpp_local.limit.tree import LimitTree


class AdjacencyTree:
    """Hand-built rooted tree satisfying the ExpandableGraph protocol.

    ``parents`` maps child -> (parent, weight); the root is 0 and the edge id
    of a tree edge is its child's id.
    """

    root = 0

    def __init__(self, parents: dict[int, tuple[int, float]]):
        self.parents = parents
        self.kids: dict[int, list[int]] = {0: []}
        for c in sorted(parents):
            p, _ = parents[c]
            self.kids.setdefault(p, []).append(c)
            self.kids.setdefault(c, [])

    def neighbours(self, v: int) -> list[tuple[int, float, int]]:
        out = []
        if v != 0:
            p, w = self.parents[v]
            out.append((p, w, v))
        out.extend((c, self.parents[c][1], c) for c in self.kids[v])
        return out

    def degree(self, v: int) -> int:
        return len(self.kids[v]) + (v != 0)


def rooted(n: int, edges: list[tuple[int, int, int]], weight: float = 1.0) -> TruncatedNeighbourhood:
    """Rooted coloured multigraph from (a, b, colour) triples; the root is 0."""
    return TruncatedNeighbourhood(
        R=1,
        n_vertices=n,
        edges=tuple((a, b, weight, c) for a, b, c in edges),
    )


class RealizedTreeView:
    """A limit tree explored through the generic graph path, all children at once."""

    root = 0

    def __init__(self, t: LimitTree):
        self.view = LimitTreeView(t)

    def neighbours(self, v: int) -> list[tuple[int, float, int]]:
        return self.view.neighbours(v)

    def degree(self, v: int) -> int:
        return self.view.degree(v)


class SteppingClock:
    """Stands in for the ``time`` module; every reading is one second later."""

    def __init__(self):
        self.now = 0.0

    def monotonic(self) -> float:
        self.now += 1.0
        return self.now
