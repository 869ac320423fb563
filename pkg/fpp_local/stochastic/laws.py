"""Degree and weight laws and the scalar quantities derived from them.

All models are immutable once built. Sampling always takes an explicit
:class:`~fpp_local.core.rng.RngStream`.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, NamedTuple

import numpy as np
from scipy import integrate, stats

from fpp_local.core.errors import ConvergenceError, ModelError
from fpp_local.core.rng import RngStream

logger = logging.getLogger(__name__)

PMF_TOL = 1e-12
DEFAULT_K_MAX = 10**6
FIXED_POINT_CAP = 10**6


def _normalized(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = probs > 0
    values, probs = values[keep], probs[keep]
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    return values.astype(np.int64), probs / probs.sum()


@dataclass(frozen=True, eq=False)
class DegreeModel:
    """Law of the vertex degree D on the nonnegative integers (finite support)."""

    kind: Literal["deterministic", "pmf", "power_law"]
    values: np.ndarray
    probs: np.ndarray
    exponent: float | None = None
    k_max: int | None = None

    @classmethod
    def deterministic(cls, k: int) -> "DegreeModel":
        if k < 0:
            raise ModelError(f"degree must be nonnegative, got {k}")
        return cls("deterministic", np.array([k], dtype=np.int64), np.array([1.0]))

    @classmethod
    def from_atoms(cls, atoms: dict[int, float]) -> "DegreeModel":
        if not atoms:
            raise ModelError("empty degree pmf")
        values = np.array([int(k) for k in atoms], dtype=np.int64)
        probs = np.array([float(p) for p in atoms.values()])
        if (values < 0).any():
            raise ModelError("degree pmf has negative atoms")
        if (probs < 0).any():
            raise ModelError("degree pmf has negative probabilities")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ModelError(f"degree pmf sums to {probs.sum()!r}, expected 1")
        values, probs = _normalized(values, probs)
        return cls("pmf", values, probs)

    @classmethod
    def power_law(
        cls, exponent: float, k_max: int = DEFAULT_K_MAX, k_min: int = 1
    ) -> "DegreeModel":
        """P(D = k) proportional to k**(-exponent) on ``k_min..k_max``."""
        if k_min < 1 or k_max < k_min:
            raise ModelError(f"invalid power-law support [{k_min}, {k_max}]")
        values = np.arange(k_min, k_max + 1, dtype=np.int64)
        weights = np.power(values.astype(float), -float(exponent))
        return cls("power_law", values, weights / weights.sum(), float(exponent), k_max)

    def pmf(self, k: int) -> float:
        i = int(np.searchsorted(self.values, k))
        if i < len(self.values) and self.values[i] == k:
            return float(self.probs[i])
        return 0.0

    @cached_property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @cached_property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def sample(self, size: int, rng: RngStream) -> np.ndarray:
        if len(self.values) == 1:
            return np.full(size, self.values[0], dtype=np.int64)
        idx = np.searchsorted(self.cdf, rng.gen.random(size), side="right")
        return self.values[np.minimum(idx, len(self.values) - 1)]

    def metadata(self) -> dict:
        meta: dict = {"kind": self.kind, "support": [int(self.values[0]), int(self.values[-1])]}
        if self.kind == "power_law":
            meta.update(exponent=self.exponent, k_max=self.k_max)
        return meta


@dataclass(frozen=True, eq=False)
class OffspringModel:
    """Law of D* - 1, the number of forward neighbours along an edge."""

    values: np.ndarray
    probs: np.ndarray
    infinite_mean: bool = False

    @cached_property
    def mean(self) -> float:
        if self.infinite_mean:
            return math.inf
        return float(np.dot(self.values, self.probs))

    @cached_property
    def truncated_mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @cached_property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def pmf(self, k: int) -> float:
        i = int(np.searchsorted(self.values, k))
        if i < len(self.values) and self.values[i] == k:
            return float(self.probs[i])
        return 0.0

    def generating_function(self, s: float) -> float:
        return float(np.dot(self.probs, np.power(s, self.values)))

    def sample(self, size: int, rng: RngStream) -> np.ndarray:
        if len(self.values) == 1:
            return np.full(size, self.values[0], dtype=np.int64)
        idx = np.searchsorted(self.cdf, rng.gen.random(size), side="right")
        return self.values[np.minimum(idx, len(self.values) - 1)]


@dataclass(frozen=True, eq=False)
class WeightModel:
    """Atomless edge-weight law on (0, inf)."""

    kind: Literal["exponential", "uniform", "weibull"]
    params: dict = field(default_factory=dict)

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "WeightModel":
        if rate <= 0:
            raise ModelError(f"exponential rate must be positive, got {rate}")
        return cls("exponential", {"rate": float(rate)})

    @classmethod
    def uniform(cls, a: float, b: float) -> "WeightModel":
        if not 0 <= a < b:
            raise ModelError(f"uniform weights need 0 <= a < b, got a={a}, b={b}")
        return cls("uniform", {"a": float(a), "b": float(b)})

    @classmethod
    def weibull(cls, shape: float, scale: float = 1.0) -> "WeightModel":
        if shape <= 0 or scale <= 0:
            raise ModelError("weibull shape and scale must be positive")
        return cls("weibull", {"shape": float(shape), "scale": float(scale)})

    @cached_property
    def dist(self):
        p = self.params
        match self.kind:
            case "exponential":
                return stats.expon(scale=1.0 / p["rate"])
            case "uniform":
                return stats.uniform(loc=p["a"], scale=p["b"] - p["a"])
            case "weibull":
                return stats.weibull_min(c=p["shape"], scale=p["scale"])
        raise ModelError(f"unknown weight law {self.kind!r}")

    def sample(self, size: int, rng: RngStream) -> np.ndarray:
        p = self.params
        match self.kind:
            case "exponential":
                x = rng.gen.exponential(1.0 / p["rate"], size)
            case "uniform":
                x = p["a"] + (p["b"] - p["a"]) * (1.0 - rng.gen.random(size))
            case "weibull":
                x = p["scale"] * rng.gen.weibull(p["shape"], size)
            case _:
                raise ModelError(f"unknown weight law {self.kind!r}")
        # float underflow is the only way to hit 0
        return np.maximum(x, np.finfo(float).tiny)

    def cdf(self, x):
        return self.dist.cdf(x)

    def ppf(self, q):
        return self.dist.ppf(q)

    def metadata(self) -> dict:
        return {"kind": self.kind, **self.params}


class SurvivalProbabilities(NamedTuple):
    zeta_star: float
    zeta: float
    q_star: float
    iterations: int


@dataclass(frozen=True)
class DerivedQuantities:
    mean_degree: float
    nu: float
    zeta_star: float
    zeta: float
    malthusian: float | None
    malthusian_note: str | None
    regular: bool
    degree: dict
    weight: dict


def size_biased(d: DegreeModel) -> OffspringModel:
    """Law of D* - 1 where P(D* = k) = k P(D = k) / E[D]."""
    if d.mean <= 0:
        raise ModelError("zero-mean degree law")
    keep = d.values >= 1
    values = d.values[keep] - 1
    probs = d.values[keep] * d.probs[keep] / d.mean
    values, probs = _normalized(values, probs)
    infinite = d.kind == "power_law" and d.exponent is not None and d.exponent <= 3
    return OffspringModel(values, probs, infinite)


def offspring_mean(d: DegreeModel) -> float:
    """nu = E[D(D-1)] / E[D]; infinite for power laws with exponent <= 3."""
    if d.mean <= 0:
        raise ModelError("zero-mean degree law")
    if d.kind == "power_law" and d.exponent is not None and d.exponent <= 3:
        return math.inf
    v = d.values.astype(float)
    return float(np.dot(v * (v - 1), d.probs)) / d.mean


def survival_probs(
    off: OffspringModel, d: DegreeModel, tol: float = 1e-12
) -> SurvivalProbabilities:
    """Survival probabilities of the D*-1 tree (zeta*) and of the D-rooted tree (zeta).

    q* is the smallest fixed point of the offspring generating function,
    reached by monotone iteration from 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = off.truncated_mean
    if m <= 1 and off.pmf(1) < 1:
        # extinction is certain for (sub)critical non-degenerate offspring
        q, iterations = 1.0, 0
    else:
        q, iterations = 0.0, 0
        while True:
            nxt = off.generating_function(q)
            iterations += 1
            if abs(nxt - q) < tol:
                q = nxt
                break
            if iterations >= FIXED_POINT_CAP:
                raise ConvergenceError("extinction fixed point did not converge", abs(nxt - q))
            q = nxt
    zeta = 1.0 - float(np.dot(d.probs, np.power(q, d.values)))
    logger.debug("survival fixed point q*=%.15g after %d iterations", q, iterations)
    return SurvivalProbabilities(1.0 - q, zeta, q, iterations)


def laplace_transform(w: WeightModel, lam: float) -> float:
    """L(lam) = E[exp(-lam X)] for X with law ``w``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0:
        return 1.0
    p = w.params
    match w.kind:
        case "exponential":
            return p["rate"] / (p["rate"] + lam)
        case "uniform":
            width = p["b"] - p["a"]
            return math.exp(-lam * p["a"]) * -math.expm1(-lam * width) / (lam * width)
        case "weibull":
            k, scale = p["shape"], p["scale"]
            # substitute x = scale * (-log u)**(1/k) to integrate over (0, 1)
            value, _ = integrate.quad(
                lambda u: math.exp(-lam * scale * (-math.log(u)) ** (1.0 / k)),
                0.0,
                1.0,
                epsabs=1e-14,
                epsrel=1e-13,
                limit=200,
            )
            return value
    raise ModelError(f"unknown weight law {w.kind!r}")


def malthusian_lambda(off: OffspringModel, w: WeightModel, tol: float = 1e-12) -> float:
    """Unique lam > 0 with E[D*-1] * L(lam) = 1, by bracketing bisection."""
    m = off.mean
    if math.isinf(m):
        raise ModelError("infinite-mean offspring: Malthusian regime inapplicable")
    if m <= 1:
        raise ModelError("no Malthusian parameter (not supercritical or explosive regime)")

    hi = 1.0
    while m * laplace_transform(w, hi) >= 1:
        hi *= 2
        if hi > 1e300:
            raise ConvergenceError("no bracket for the Malthusian parameter", m * laplace_transform(w, hi) - 1)
    lo = 0.0
    mid = hi
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        residual = m * laplace_transform(w, mid) - 1.0
        if abs(residual) < tol:
            return mid
        if residual > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    residual = m * laplace_transform(w, mid) - 1.0
    if abs(residual) < tol:
        return mid
    raise ConvergenceError("Malthusian bisection stalled", abs(residual))


def is_regular(d: DegreeModel) -> bool:
    """Analytic check of E[D^2 log+ D] < inf for the model family."""
    match d.kind:
        case "deterministic" | "pmf":
            return True
        case "power_law":
            return d.k_max is not None
    return False


def derive(d: DegreeModel, w: WeightModel, tol: float = 1e-12) -> DerivedQuantities:
    off = size_biased(d)
    nu = offspring_mean(d)
    survival = survival_probs(off, d, tol)
    lam: float | None = None
    note: str | None = None
    try:
        lam = malthusian_lambda(off, w, tol)
    except ModelError as e:
        note = str(e)
    return DerivedQuantities(
        mean_degree=d.mean,
        nu=nu,
        zeta_star=survival.zeta_star,
        zeta=survival.zeta,
        malthusian=lam,
        malthusian_note=note,
        regular=is_regular(d),
        degree=d.metadata(),
        weight=w.metadata(),
    )
