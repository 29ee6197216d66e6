"""Deterministic generator for randomized batteries.

splitmix64, fixed here so batteries reproduce bit-for-bit across runs and
across reimplementations in other languages:

    state: unsigned 64-bit, advanced by state += 0x9E3779B97F4A7C15
    output(z = new state):
        z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
        z ^= z >> 27;  z *= 0x94D049BB133111EB
        z ^= z >> 31
    bounded draw below(n) = output % n   (modulo bias accepted, documented)

All arithmetic is mod 2^64.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Draw from [0, n). n must be positive."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        return self.next() % n

    def choice(self, seq):
        return seq[self.below(len(seq))]
