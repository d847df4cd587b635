"""Crop sampling that is bit-compatible with the consuming experiment runner.

The exporter and the experiment runner are separate programs, so the crop
boxes recorded in a manifest must come from an exactly specified sampler.
This module reimplements that contract from scratch: SplitMix64 words,
doubles from the top 53 bits, and four draws per box in the order
w, h, x0, y0.  A shared golden-vector file pins both implementations to the
same byte-level behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

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


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in unit-square coordinates."""

    x0: float
    y0: float
    x1: float
    y1: float

    def to_json(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


FULL_FRAME = Box(0.0, 0.0, 1.0, 1.0)


def sample_crop(rng: SplitMix64, alpha: float, beta: float) -> Box:
    """Draw one crop box; consumes exactly four words in the order w, h, x0, y0."""
    w = rng.uniform(alpha, beta)
    h = rng.uniform(alpha, beta)
    x0 = rng.uniform(0.0, 1.0 - w)
    y0 = rng.uniform(0.0, 1.0 - h)
    # min() guards the <= 1 bound against the last-ulp rounding of x0 + w.
    return Box(x0, y0, min(x0 + w, 1.0), min(y0 + h, 1.0))
