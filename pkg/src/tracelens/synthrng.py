"""Portable deterministic random generator for trace synthesis.

SplitMix64 (Steele, Lea & Flood 2014): state advances by the golden-gamma
constant 0x9E3779B97F4A7C15 and each draw finalizes with two xor-shift
multiplies (0xBF58476D1CE4E5B9, 0x94D049BB133111EB). All arithmetic is
exact 64-bit modular integer math, so any language reproduces identical
streams; golden-file tests pin the output.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def next_range(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.next_below(hi - lo + 1)

    def next_bool(self, p: float) -> bool:
        return self.next_float() < p

    def next_geometric(self, mean: float) -> int:
        """Geometric run length >= 1 with the given mean (mean > 1)."""
        p = 1.0 / mean
        u = self.next_float()
        return int(math.floor(math.log1p(-u) / math.log1p(-p))) + 1
