"""Seeded random streams split by label."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def _label_key(label: str) -> tuple[int, ...]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


@dataclass(frozen=True)
class RandomSource:
    """A 64-bit seed from which independent, reproducible streams are derived.

    ``stream("feasible/actor-3")`` always yields the same generator state for
    the same seed and label, independent of what other streams were drawn.
    """

    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

    def stream(self, label: str = "") -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=_label_key(label))
        return np.random.Generator(np.random.PCG64(ss))

    def child_seed(self, label: str) -> int:
        """Derived integer seed, for handing to components that take ints."""
        return int(self.stream(label).integers(0, 2**63 - 1))


def as_random_source(seed) -> RandomSource:
    if isinstance(seed, RandomSource):
        return seed
    if seed is None:
        seed = 0
    return RandomSource(int(seed))
