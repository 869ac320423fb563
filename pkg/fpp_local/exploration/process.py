"""Exploration of a rooted weighted graph in increasing distance from the root.

Starting from the R-ball around the root, the active vertex closest to the
root is explored at every step and its neighbours join the active set with
their degree recorded. One engine serves configuration graphs and limit
trees through the :class:`ExpandableGraph` protocol.

On a limit tree the children of an explored node enter the heap one at a
time, lightest first, as their elder sibling is explored. The rest stay
pending: they are active, and are classified from the parent's sorted
weight array without being materialized.
"""

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Protocol

import numpy as np

from fpp_local.core.rng import RngStream
from fpp_local.graph.config_graph import MultiGraph
from fpp_local.graph.fpp import BLACK, TruncatedNeighbourhood
from fpp_local.limit.tree import LimitTree

logger = logging.getLogger(__name__)


class ExpandableGraph(Protocol):
    root: int

    def neighbours(self, v: int) -> list[tuple[int, float, int]]: ...

    def degree(self, v: int) -> int: ...


class ConfigGraphView:
    def __init__(self, g: MultiGraph, root: int):
        self.g = g
        self.root = root

    def neighbours(self, v: int) -> list[tuple[int, float, int]]:
        return self.g.neighbours(v)

    def degree(self, v: int) -> int:
        return self.g.degree(v)


class LimitTreeView:
    """A limit tree seen as a graph; the edge id of a tree edge is its child's id."""

    root = 0

    def __init__(self, t: LimitTree):
        self.t = t

    def neighbours(self, v: int) -> list[tuple[int, float, int]]:
        t = self.t
        out = [(t.parent[v], t.weight[v], v)] if v != 0 else []
        out.extend((c, t.weight[c], c) for c in t.realize(v))
        return out

    def degree(self, v: int) -> int:
        return self.t.count[v] + (v != 0)


@dataclass
class ActiveVertex:
    dist: float
    anchor: int
    degree: int
    parent_dist: float
    tie: float


@dataclass
class PendingChildren:
    """Children of an explored tree node from rank ``next`` on, all active and out of the heap."""

    next: int
    anchor: int


@dataclass
class ExplorationState:
    graph: ExpandableGraph
    R: int
    ties: RngStream
    N: int = 0
    dist: dict[int, float] = field(default_factory=dict)
    hops: dict[int, int] = field(default_factory=dict)
    order: list[int] = field(default_factory=list)
    edges: dict[int, tuple[int, int, float]] = field(default_factory=dict)
    active: dict[int, ActiveVertex] = field(default_factory=dict)
    explored: list[int] = field(default_factory=list)
    heap: list[tuple[float, float, int]] = field(default_factory=list)
    pending: dict[int, PendingChildren] = field(default_factory=dict)
    v_star: int = -1
    v_star_R: int = -1
    capped: bool = False

    @property
    def root(self) -> int:
        return self.graph.root

    @property
    def d_star(self) -> float:
        return self.dist.get(self.v_star, 0.0)

    @property
    def active_count(self) -> int:
        if not self.pending:
            return len(self.active)
        t = self.graph.t
        return len(self.active) + sum(t.count[p] - c.next for p, c in self.pending.items())

    def snapshot(self) -> tuple:
        return (
            self.N,
            self.v_star,
            self.v_star_R,
            tuple(sorted((v, a.dist, a.anchor, a.degree) for v, a in self.active.items())),
            tuple(sorted((p, c.next, c.anchor) for p, c in self.pending.items())),
            tuple(sorted(self.edges.items())),
        )

    def _push(self, v: int) -> None:
        a = self.active[v]
        heappush(self.heap, (a.dist, a.tie, v))

    def _discover(self, v: int) -> None:
        self.order.append(v)


@dataclass(frozen=True)
class ActiveClassification:
    R: int
    eps: float
    counts: tuple[int, int, int, int]
    stubs: tuple[int, int, int, int]
    window_count: int
    window_stubs: int

    @property
    def off_branch_count(self) -> int:
        return self.counts[2] + self.counts[3]

    @property
    def off_branch_stubs(self) -> int:
        return self.stubs[2] + self.stubs[3]


def init_exploration(g: ExpandableGraph, R: int, ties: RngStream) -> ExplorationState:
    """G(0) is the R-ball of the root; the vertices at hop distance R are active."""
    if isinstance(g, LimitTreeView):
        return _init_tree(g, R, ties)
    s = ExplorationState(g, R, ties)
    root = g.root
    s.hops[root] = 0
    s._discover(root)
    queue = deque([root])
    ball_nbrs: dict[int, list[tuple[int, float, int]]] = {}
    while queue:
        v = queue.popleft()
        nbrs = g.neighbours(v)
        ball_nbrs[v] = nbrs
        if s.hops[v] == R:
            continue
        for x, _, _ in nbrs:
            if x not in s.hops:
                s.hops[x] = s.hops[v] + 1
                s._discover(x)
                queue.append(x)
    for v, nbrs in ball_nbrs.items():
        for x, w, e in nbrs:
            if x in s.hops and e not in s.edges:
                s.edges[e] = (v, x, w)

    # distances and predecessors inside the ball
    pred_dist: dict[int, float] = {root: -math.inf}
    s.dist[root] = 0.0
    heap = [(0.0, root)]
    done = set()
    while heap:
        d, v = heappop(heap)
        if v in done:
            continue
        done.add(v)
        for x, w, _ in ball_nbrs[v]:
            if x in s.hops and x not in done and d + w < s.dist.get(x, math.inf):
                s.dist[x] = d + w
                pred_dist[x] = d
                heappush(heap, (d + w, x))

    for v in s.order:
        if s.hops[v] == R:
            s.active[v] = ActiveVertex(
                dist=s.dist.get(v, math.inf),
                anchor=v,
                degree=g.degree(v),
                parent_dist=pred_dist.get(v, -math.inf),
                tie=ties.random(),
            )
            s._push(v)
    return s


def _init_tree(g: LimitTreeView, R: int, ties: RngStream) -> ExplorationState:
    # tree distances are birth times; nothing beyond generation R is materialized
    t = g.t
    s = ExplorationState(g, R, ties)
    s.hops[0] = 0
    s.dist[0] = 0.0
    s._discover(0)
    level = [0]
    for h in range(1, R + 1):
        nxt = []
        for v in level:
            for c in t.realize(v):
                s.hops[c] = h
                s.dist[c] = t.birth[c]
                s.edges[c] = (v, c, t.weight[c])
                s._discover(c)
                nxt.append(c)
        level = nxt
    for v in level:
        parent_dist = t.birth[t.parent[v]] if v != 0 else -math.inf
        s.active[v] = ActiveVertex(t.birth[v], v, g.degree(v), parent_dist, ties.random())
        s._push(v)
    return s


def _activate_next_child(s: ExplorationState, p: int) -> None:
    t = s.graph.t
    pc = s.pending[p]
    c = t.child(p, pc.next)
    pc.next += 1
    if pc.next == t.count[p]:
        del s.pending[p]
    s.edges[c] = (p, c, t.weight[c])
    s.dist[c] = t.birth[c]
    s._discover(c)
    s.active[c] = ActiveVertex(t.birth[c], pc.anchor, s.graph.degree(c), t.birth[p], s.ties.random())
    s._push(c)


def _expand_tree_node(s: ExplorationState, v: int, anchor: int) -> None:
    t = s.graph.t
    if v != 0 and t.parent[v] in s.pending:
        _activate_next_child(s, t.parent[v])
    if t.count[v]:
        s.pending[v] = PendingChildren(0, anchor)
        _activate_next_child(s, v)


def explore_step(s: ExplorationState) -> ExplorationState:
    """Explore the active vertex closest to the root (ties uniformly at random)."""
    s.N += 1
    while s.heap:
        d, _, v = heappop(s.heap)
        a = s.active.get(v)
        if a is not None and a.dist == d:
            break
    else:
        s.v_star = s.v_star_R = s.root
        return s

    del s.active[v]
    s.explored.append(v)
    s.v_star, s.v_star_R = v, a.anchor
    if isinstance(s.graph, LimitTreeView):
        _expand_tree_node(s, v, a.anchor)
        return s
    for x, w, e in s.graph.neighbours(v):
        if e not in s.edges:
            s.edges[e] = (v, x, w)
        nd = d + w
        if x not in s.hops and x not in s.dist:
            s.dist[x] = nd
            s._discover(x)
            s.active[x] = ActiveVertex(nd, a.anchor, s.graph.degree(x), d, s.ties.random())
            s._push(x)
        elif x in s.active and nd < s.active[x].dist:
            # a shorter route through the explored region; ball vertices keep their own anchor
            b = s.active[x]
            b.dist, b.parent_dist = nd, d
            if x not in s.hops:
                b.anchor = a.anchor
            s.dist[x] = nd
            s._push(x)
    return s


def classify_active(s: ExplorationState, eps: float) -> ActiveClassification:
    """Split the active set by branch membership and the eps distance threshold.

    Types: (i) in the branch of v*_R(N) and within eps of d(o, v*(N)),
    (ii) in the branch and beyond eps, (iii) off the branch within eps,
    (iv) off the branch beyond eps.
    """
    if s.v_star < 0 or s.v_star == s.root:
        raise ValueError("no reference vertex")
    if eps <= 0:
        raise ValueError("eps must be positive")
    d_star = s.d_star
    counts = [0, 0, 0, 0]
    stubs = [0, 0, 0, 0]
    window_count = window_stubs = 0
    for a in s.active.values():
        assert s.R == 0 or a.anchor != s.root, "ball interior vertex became active"
        near = a.dist <= d_star + eps
        kind = (0 if near else 1) if a.anchor == s.v_star_R else (2 if near else 3)
        counts[kind] += 1
        stubs[kind] += a.degree - 1
        if kind == 0 and a.parent_dist < d_star <= a.dist < d_star + eps:
            window_count += 1
            window_stubs += a.degree - 1
    for p, pc in s.pending.items():
        # pending children: dist = birth(p) + weight, degree - 1 = their offspring count
        t = s.graph.t
        base = t.birth[p]
        w = t.kid_weights[p][pc.next :]
        k = t.kid_counts[p][pc.next :]
        cut = int(np.searchsorted(w, d_star + eps - base, side="right"))
        near, far = (0, 1) if pc.anchor == s.v_star_R else (2, 3)
        counts[near] += cut
        counts[far] += len(w) - cut
        stubs[near] += int(k[:cut].sum())
        stubs[far] += int(k[cut:].sum())
        if near == 0 and base < d_star:
            lo, hi = np.searchsorted(w, [d_star - base, d_star + eps - base])
            window_count += int(hi - lo)
            window_stubs += int(k[lo:hi].sum())
    return ActiveClassification(s.R, eps, tuple(counts), tuple(stubs), window_count, window_stubs)


def stub_counts(c: ActiveClassification) -> tuple[int, int]:
    """Half-edges leaving the explored region: (birth window in branch, off branch)."""
    return c.window_stubs, c.off_branch_stubs


def run_exploration(
    s: ExplorationState,
    steps: int,
    max_seconds: float | None = None,
) -> ExplorationState:
    """Advance up to ``steps`` steps; stop early (flagged) when the wall clock runs out."""
    start = time.monotonic()
    for _ in range(steps):
        if max_seconds is not None and time.monotonic() - start > max_seconds:
            s.capped = True
            logger.warning("exploration stopped at N=%d by the wall-clock cap", s.N)
            break
        explore_step(s)
    return s


def trace_row(s: ExplorationState, eps: float) -> dict:
    row = {
        "N": s.N,
        "v_star": s.v_star,
        "d_star": s.d_star,
        "active": s.active_count,
        "type_i": 0,
        "type_ii": 0,
        "type_iii": 0,
        "type_iv": 0,
        "in_branch_window": 0,
        "off_branch": 0,
    }
    if s.v_star >= 0 and s.v_star != s.root:
        c = classify_active(s, eps)
        row.update(
            type_i=c.counts[0],
            type_ii=c.counts[1],
            type_iii=c.counts[2],
            type_iv=c.counts[3],
        )
        row["in_branch_window"], row["off_branch"] = stub_counts(c)
    return row


def explored_subgraph(s: ExplorationState) -> TruncatedNeighbourhood:
    """G(N) as an uncoloured rooted graph with local ids in discovery order.

    Pending tree children are materialized and listed after the discovered vertices.
    """
    order = list(s.order)
    links = [edge for _, edge in sorted(s.edges.items())]
    for p, pc in s.pending.items():
        t = s.graph.t
        for i in range(pc.next, t.count[p]):
            c = t.child(p, i)
            order.append(c)
            links.append((p, c, t.weight[c]))
    local = {v: i for i, v in enumerate(order)}
    edges = tuple((local[a], local[b], w, BLACK) for a, b, w in links)
    return TruncatedNeighbourhood(
        s.R, len(order), edges, tuple(order), tuple(s.hops.get(v, -1) for v in order)
    )
