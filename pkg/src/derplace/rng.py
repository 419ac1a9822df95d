"""Deterministic pseudo-random generator used for all seed-addressable draws.

Placement runs and gain sampling must reproduce bit-identically across
platforms and library versions, so nothing here delegates to ``random`` or
``numpy.random``.  The generator is SplitMix64 (Steele, Lea & Flood 2014):
a 64-bit counter advanced by the golden-gamma constant and scrambled with
two xor-multiply rounds.  Bounded integers use rejection sampling, which
avoids modulo bias; floats take the top 53 bits of one output word.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Seed-stable 64-bit PRNG with uniform float and bounded-int draws."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform draw from [0, 1) with 53-bit resolution."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def uniform_open_closed(self, high: float) -> float:
        """Uniform draw from the half-open interval (0, high]."""
        return high * (1.0 - self.random())

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        zone = (1 << 64) - ((1 << 64) % n)
        while True:
            draw = self.next_uint64()
            if draw < zone:
                return draw % n

    def choice(self, seq):
        """Uniform choice from a non-empty sequence."""
        return seq[self.below(len(seq))]

    def sign(self) -> float:
        """Uniform draw from {-1.0, +1.0}."""
        return 1.0 if self.below(2) else -1.0
