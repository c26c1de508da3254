"""Portable seeded random stream.

All randomness in the package (datasets, parameter initialization, shuffles,
Monte-Carlo sampling) goes through :class:`XorShift64Star`, so results are
bit-identical across platforms and library versions.

Generator: xorshift64* (Vigna 2016)

    x ^= x >> 12
    x ^= x << 25   (mod 2**64)
    x ^= x >> 27
    out = x * 0x2545F4914F6CDD1D   (mod 2**64)

The 64-bit state is initialized from the user seed with one splitmix64 step
(increment 0x9E3779B97F4A7C15, multipliers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB), which maps every seed, including 0, to a nonzero state.
Doubles are produced from the top 53 bits: ``(out >> 11) * 2**-53`` in [0, 1).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
XORSHIFT_MULTIPLIER = 0x2545F4914F6CDD1D
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(seed: int) -> int:
    z = (seed + SPLITMIX_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        state = splitmix64(seed & MASK64)
        self._state = state if state != 0 else SPLITMIX_GAMMA

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * XORSHIFT_MULTIPLIER) & MASK64

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int | tuple | None = None):
        if size is None:
            return low + (high - low) * self.random()
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape))
        vals = np.array([self.random() for _ in range(count)], dtype=np.float64)
        return (low + (high - low) * vals).reshape(shape)

    def below(self, n: int) -> int:
        """Integer in [0, n)."""
        return min(int(self.random() * n), n - 1)
