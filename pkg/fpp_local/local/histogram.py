"""Histograms of canonical codes and their total-variation distance."""

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from fpp_local.core.rng import RngStream


@dataclass
class CodeHistogram:
    counts: Counter = field(default_factory=Counter)
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def add(self, code: bytes, count: int = 1) -> None:
        self.counts[code] += count

    def merge(self, other: "CodeHistogram") -> "CodeHistogram":
        """Associative, order-insensitive merge; metadata of ``self`` wins."""
        return CodeHistogram(self.counts + other.counts, {**other.meta, **self.meta})

    def to_json(self) -> dict:
        return {
            "meta": self.meta,
            "codes": {code.hex(): self.counts[code] for code in sorted(self.counts)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "CodeHistogram":
        counts = Counter({bytes.fromhex(k): int(v) for k, v in data["codes"].items()})
        return cls(counts, dict(data.get("meta", {})))


def tv_distance(h1: CodeHistogram, h2: CodeHistogram) -> float:
    """Half the L1 distance between the normalized histograms."""
    t1, t2 = h1.total, h2.total
    if t1 <= 0 or t2 <= 0:
        raise ValueError("empty histogram")
    keys = set(h1.counts) | set(h2.counts)
    return 0.5 * math.fsum(abs(h1.counts[k] / t1 - h2.counts[k] / t2) for k in keys)


def _aligned(h1: CodeHistogram, h2: CodeHistogram) -> tuple[np.ndarray, np.ndarray]:
    keys = sorted(set(h1.counts) | set(h2.counts))
    return (
        np.array([h1.counts[k] for k in keys], dtype=float),
        np.array([h2.counts[k] for k in keys], dtype=float),
    )


def _tv(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(c1 / c1.sum(axis=-1, keepdims=True) - c2 / c2.sum(axis=-1, keepdims=True)).sum(axis=-1)


def tv_bootstrap_se(
    h1: CodeHistogram, h2: CodeHistogram, rng: RngStream, reps: int = 200
) -> float:
    """Bootstrap standard error of the TV estimate (both samples resampled)."""
    c1, c2 = _aligned(h1, h2)
    t1, t2 = int(c1.sum()), int(c2.sum())
    b1 = rng.gen.multinomial(t1, c1 / t1, size=reps).astype(float)
    b2 = rng.gen.multinomial(t2, c2 / t2, size=reps).astype(float)
    return float(_tv(b1, b2).std(ddof=1))


def tv_null(
    h1: CodeHistogram, h2: CodeHistogram, rng: RngStream, reps: int = 200
) -> tuple[float, float]:
    """Mean and s.d. of the TV between two same-size samples of the pooled law.

    This is the value the TV estimator takes when both sides share one law.
    """
    c1, c2 = _aligned(h1, h2)
    pooled = (c1 + c2) / (c1 + c2).sum()
    t1, t2 = int(c1.sum()), int(c2.sum())
    b1 = rng.gen.multinomial(t1, pooled, size=reps).astype(float)
    b2 = rng.gen.multinomial(t2, pooled, size=reps).astype(float)
    values = _tv(b1, b2)
    return float(values.mean()), float(values.std(ddof=1))
