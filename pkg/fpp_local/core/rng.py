"""Counter-based, splittable random streams.

Every random draw in fpp-local goes through an :class:`RngStream`. A stream is
identified by the master seed and a tuple key (purpose tag, replica index,
...). Replica ``k`` can therefore be reproduced without generating replicas
``0..k-1``.
"""

import numpy as np

# Purpose tags for the first component of a stream key.
GRAPH = 0
PAIRS = 1
LIMIT = 2
EXPLORE = 3
TIES = 4
COIN = 5
SCALING = 6
BOOTSTRAP = 7


class RngStream:
    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self.gen = np.random.Generator(np.random.Philox(sequence))

    def spawn(self, *key: int) -> "RngStream":
        """Child stream; independent of this one and of its other children."""
        return RngStream(self.seed, self.key + tuple(key))

    def random(self) -> float:
        return float(self.gen.random())

    def integer(self, high: int) -> int:
        """Uniform integer in ``[0, high)``."""
        return int(self.gen.integers(high))

    def bernoulli(self, p: float) -> bool:
        return bool(self.gen.random() < p)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"
