"""Deterministic random number generation for crop sampling.

Crop sequences must be reproducible bit-for-bit across processes, platforms,
and reimplementations in exporter tooling, so the sampler is built on
SplitMix64, a public-domain generator with an exactly specified state
transition.  Unit-interval doubles come from the top 53 bits of each output
word, which is portable IEEE-754 arithmetic everywhere.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream of uint64 words and unit-interval doubles."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        """Double in [0, 1), from the top 53 bits of the next word."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        """Uniform draw on [low, high); consumes exactly one word even when low == high."""
        return low + (high - low) * self.next_double()


def derive_seed(global_seed: int, index: int) -> int:
    """Per-item stream seed: global seed XOR item index, reduced to 64 bits."""
    return (global_seed ^ index) & _MASK64
