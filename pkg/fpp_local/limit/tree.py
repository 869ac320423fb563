"""Limiting coloured trees: weighted Galton-Watson trees with a red ray.

The root has D children, every other node D*-1. Nodes are kept in a flat
arena (parallel lists indexed by node id). When a node's children are first
needed, their edge weights are drawn as one sorted array together with their
offspring counts. A child enters the arena only when it is used. Children
are numbered in increasing weight order, so birth-order growth only ever
needs the lightest unborn child of each born node on its frontier. A node
is *realized* once all its children are in the arena. It is *born* when
birth-order growth pops it from the frontier. Lazy realization (for
martingales or truncation) and birth-order growth can be mixed on the same
tree.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Literal

import numpy as np

from fpp_local.core.errors import CapExceededError
from fpp_local.core.rng import RngStream
from fpp_local.graph.fpp import BLACK, RED, TruncatedNeighbourhood
from fpp_local.stochastic.laws import DegreeModel, OffspringModel, WeightModel

logger = logging.getLogger(__name__)

Regime = Literal["explosive", "malthusian"]

DEFAULT_NODE_CAP = 10**7
DEFAULT_HORIZON = 12
DEFAULT_BUDGET = 10**4


@dataclass(frozen=True)
class TreeNode:
    id: int
    parent: int | None
    weight: float
    birth: float
    generation: int
    child_count: int
    realized: bool
    children: tuple[int, ...]


@dataclass(frozen=True)
class MartingaleEstimate:
    node: int
    horizon: int
    value: float


class LimitTree:
    def __init__(
        self,
        d: DegreeModel,
        off: OffspringModel,
        w: WeightModel,
        rng: RngStream,
        regime: Regime | None = None,
        node_cap: int = DEFAULT_NODE_CAP,
    ):
        self.d, self.off, self.w = d, off, w
        self.rng = rng
        self.regime = regime
        self.node_cap = node_cap
        self.parent: list[int] = [-1]
        self.weight: list[float] = [0.0]
        self.birth: list[float] = [0.0]
        self.generation: list[int] = [0]
        # position among the siblings, lightest first
        self.rank: list[int] = [0]
        self.count: list[int] = [int(d.sample(1, rng)[0])]
        self.children: list[list[int] | None] = [None]
        self.born: list[bool] = [False]
        self.kid_weights: dict[int, np.ndarray] = {}
        self.kid_counts: dict[int, np.ndarray] = {}
        self.drawn = 0
        self.birth_order: list[int] = []
        self.frontier: list[tuple[float, int]] = [(0.0, 0)]
        self._martingales: dict[tuple[int, int, float], float] = {}

    def __len__(self) -> int:
        return len(self.parent)

    @property
    def births(self) -> int:
        return len(self.birth_order)

    @property
    def finite(self) -> bool:
        """True once birth-order growth has exhausted the frontier."""
        return not self.frontier

    @property
    def unborn(self) -> int:
        """Nodes whose weight is known but which are not born yet."""
        return self.drawn + 1 - self.births

    @property
    def last_born(self) -> int:
        return self.birth_order[-1] if self.birth_order else 0

    def node(self, v: int) -> TreeNode:
        kids = self.children[v]
        return TreeNode(
            id=v,
            parent=None if v == 0 else self.parent[v],
            weight=self.weight[v],
            birth=self.birth[v],
            generation=self.generation[v],
            child_count=self.count[v],
            realized=kids is not None and len(kids) == self.count[v],
            children=tuple(kids or ()),
        )

    def draw_children(self, v: int) -> np.ndarray:
        """Sorted child edge weights of ``v``, drawn once with the children's offspring counts."""
        if v not in self.kid_weights:
            count = self.count[v]
            self.kid_weights[v] = np.sort(self.w.sample(count, self.rng))
            self.kid_counts[v] = self.off.sample(count, self.rng)
            self.children[v] = []
            self.drawn += count
        return self.kid_weights[v]

    def _add_child(self, v: int) -> int:
        if len(self.parent) >= self.node_cap:
            raise CapExceededError(f"tree exceeds the node cap of {self.node_cap}")
        kids = self.children[v]
        i = len(kids)
        x = float(self.kid_weights[v][i])
        c = len(self.parent)
        self.parent.append(v)
        self.weight.append(x)
        self.birth.append(self.birth[v] + x)
        self.generation.append(self.generation[v] + 1)
        self.rank.append(i)
        self.count.append(int(self.kid_counts[v][i]))
        self.children.append(None)
        self.born.append(False)
        kids.append(c)
        return c

    def child(self, v: int, i: int) -> int | None:
        """Id of the ``i``-th lightest child of ``v``, or None past the last one."""
        if i >= self.count[v]:
            return None
        self.draw_children(v)
        kids = self.children[v]
        while len(kids) <= i:
            self._add_child(v)
        return kids[i]

    def realize(self, v: int) -> list[int]:
        """Bring every child of ``v`` into the arena and return their ids, lightest first."""
        self.draw_children(v)
        kids = self.children[v]
        missing = self.count[v] - len(kids)
        if missing and len(self.parent) + missing > self.node_cap:
            raise CapExceededError(f"tree exceeds the node cap of {self.node_cap}")
        for _ in range(missing):
            self._add_child(v)
        return kids

    def realize_to_depth(self, depth: int) -> None:
        """Realize every node of generation <= ``depth``."""
        level = [0]
        for _ in range(depth + 1):
            nxt = []
            for v in level:
                nxt.extend(self.realize(v))
            level = nxt
            if not level:
                break

    def _push_child(self, v: int, i: int) -> None:
        c = self.child(v, i)
        if c is not None:
            heappush(self.frontier, (self.birth[c], c))

    def grow_to(self, budget: int) -> None:
        """Give birth in increasing birth-time order until ``budget`` births or extinction.

        The frontier holds the lightest unborn child of every born node. A
        birth pushes the next sibling of the newborn and its own first child.
        """
        while self.frontier and self.births < budget:
            _, v = heappop(self.frontier)
            self.born[v] = True
            self.birth_order.append(v)
            if v != 0:
                self._push_child(self.parent[v], self.rank[v] + 1)
            self._push_child(v, 0)

    def ancestry(self, v: int) -> list[int]:
        """Nodes on the root ray ending at ``v``, root excluded."""
        path = []
        while v != 0:
            path.append(v)
            v = self.parent[v]
        path.reverse()
        return path

    def martingale(self, v: int, lam: float, n: int) -> float:
        key = (v, n, lam)
        if key not in self._martingales:
            self._martingales[key] = _level_sum(self, v, lam, n)
        return self._martingales[key]

    def truncated(self, R: int, red: set[int] | None = None) -> TruncatedNeighbourhood:
        """Realized part of generations <= R; ``red`` holds nodes whose parent edge is red."""
        red = red or set()
        if R > 0:
            self.realize_to_depth(R - 1)
        local = {0: 0}
        labels = [0]
        hops = [0]
        edges = []
        queue = deque([0])
        while queue:
            v = queue.popleft()
            if self.generation[v] == R:
                continue
            for c in self.children[v] or ():
                local[c] = len(labels)
                labels.append(c)
                hops.append(self.generation[c])
                edges.append((local[v], local[c], self.weight[c], RED if c in red else BLACK))
                queue.append(c)
        return TruncatedNeighbourhood(R, len(labels), tuple(edges), tuple(labels), tuple(hops))


def _level_sum(t: LimitTree, v: int, lam: float, n: int) -> float:
    level = [(v, 0.0)]
    for _ in range(n):
        nxt = []
        for x, dx in level:
            for c in t.realize(x):
                nxt.append((c, dx + t.weight[c]))
        level = nxt
        if not level:
            return 0.0
    return math.fsum(math.exp(-lam * dx) for _, dx in level)


def grow_by_birth_order(
    d: DegreeModel,
    off: OffspringModel,
    w: WeightModel,
    budget: int,
    rng: RngStream,
    node_cap: int = DEFAULT_NODE_CAP,
) -> LimitTree:
    if budget < 1:
        raise ValueError("budget must be at least 1")
    t = LimitTree(d, off, w, rng, node_cap=node_cap)
    t.grow_to(budget)
    return t


def truncated_martingale(t: LimitTree, v: int, lam: float, n: int) -> MartingaleEstimate:
    """Sum of exp(-lam d(v, v')) over the descendants v' exactly n generations below v."""
    try:
        value = t.martingale(v, lam, n)
    except CapExceededError as e:
        raise CapExceededError("martingale horizon too deep for this realization") from e
    return MartingaleEstimate(v, n, value)


def spine_step_probabilities(
    t: LimitTree, v: int, lam: float, horizon: int
) -> tuple[list[int], list[float]]:
    """Children of ``v`` and the probability of each being the next spine node.

    ``horizon`` is the number of generations below ``v`` used for the
    martingale of ``v``; children use ``horizon - 1``.
    """
    kids = t.realize(v)
    scores = [math.exp(-lam * t.weight[c]) * t.martingale(c, lam, horizon - 1) for c in kids]
    total = math.fsum(scores)
    assert total > 0 or not kids or t.martingale(v, lam, horizon) == 0, "positive martingale without a positive child"
    if total == 0:
        return kids, [0.0] * len(kids)
    return kids, [s / total for s in scores]


def sample_spine_malthusian(
    t: LimitTree, lam: float, R: int, n: int, rng: RngStream
) -> list[int] | None:
    """Walk R steps from the root picking children with weight exp(-lam w) M(child).

    All martingales are taken at generation n + R below the root, so the
    product of step probabilities telescopes to exp(-lam d(o, v)) M(v) / M(o).
    Returns None when the root martingale vanishes.
    """
    horizon = n + R
    try:
        if t.martingale(0, lam, horizon) == 0:
            return None
        ray: list[int] = []
        v = 0
        for k in range(R):
            kids, probs = spine_step_probabilities(t, v, lam, horizon - k)
            assert kids and math.fsum(probs) > 0, "spine reached a node with no surviving child"
            u = rng.random()
            acc = 0.0
            pick = kids[-1]
            for c, p in zip(kids, probs, strict=True):
                acc += p
                if u < acc:
                    pick = c
                    break
            ray.append(pick)
            v = pick
    except CapExceededError as e:
        raise CapExceededError("martingale horizon too deep for this realization") from e
    return ray


def sample_ray_explosive(t: LimitTree, budget: int, R: int) -> list[int] | None:
    """First R nodes on the ancestry of the last-born node, or None for a finite tree."""
    t.grow_to(budget)
    if t.finite:
        return None
    return t.ancestry(t.last_born)[:R]


def explosion_diagnostics(t: LimitTree) -> dict:
    return {
        "births": t.births,
        "last_birth_time": t.birth[t.last_born],
        "frontier": len(t.frontier),
        "unborn": t.unborn,
        "generations": max(t.generation),
        "finite": t.finite,
    }


@dataclass
class LimitParams:
    zeta: float
    lam: float | None = None
    horizon: int = DEFAULT_HORIZON
    budget: int = DEFAULT_BUDGET
    node_cap: int = DEFAULT_NODE_CAP


@dataclass
class ColouredLimitTree:
    tree: LimitTree
    R: int
    coin: int
    infinite: bool | None
    red: list[int]
    regime: Regime
    meta: dict = field(default_factory=dict)

    def rooted(self) -> TruncatedNeighbourhood:
        return self.tree.truncated(self.R, set(self.red))


def sample_coloured_limit_tree(
    regime: Regime,
    d: DegreeModel,
    off: OffspringModel,
    w: WeightModel,
    R: int,
    params: LimitParams,
    rng: RngStream,
) -> ColouredLimitTree:
    """Grow T, toss the survival coin and colour the ray prefix red if both succeed."""
    tree_rng, coin_rng, spine_rng = rng.spawn(0), rng.spawn(1), rng.spawn(2)
    coin = int(coin_rng.bernoulli(params.zeta))
    red: list[int] = []
    infinite: bool | None = None
    if regime == "malthusian":
        if params.lam is None:
            raise ValueError("malthusian regime needs the Malthusian parameter")
        t = LimitTree(d, off, w, tree_rng, regime, params.node_cap)
        if R > 0:
            t.realize_to_depth(R - 1)
        meta = {"lambda": params.lam, "horizon": params.horizon, "proxy": "root martingale > 0"}
        if coin:
            ray = sample_spine_malthusian(t, params.lam, R, params.horizon, spine_rng)
            infinite = ray is not None
            red = ray or []
    else:
        t = LimitTree(d, off, w, tree_rng, regime, params.node_cap)
        t.grow_to(params.budget)
        if R > 0:
            t.realize_to_depth(R - 1)
        infinite = not t.finite
        if coin and infinite:
            red = sample_ray_explosive(t, params.budget, R) or []
        meta = {"budget": params.budget, "proxy": "birth budget reached", **explosion_diagnostics(t)}
    return ColouredLimitTree(t, R, coin, infinite, red, regime, meta)


def dump_coloured_tree(ct: ColouredLimitTree) -> str:
    """One "parent child weight colour" line per edge of the truncated tree."""
    rooted = ct.rooted()
    labels = rooted.labels
    return "".join(f"{labels[a]} {labels[b]} {x!r} {c}\n" for a, b, x, c in rooted.edges)
