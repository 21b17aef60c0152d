"""SplitMix64: the fixed 64-bit generator behind every seeded draw.

The state advances by the golden-ratio increment ``0x9E3779B97F4A7C15`` and
each output is the state passed through the standard two-multiply finalizer.
Because output ``i`` only depends on ``seed + (i+1)·increment``, blocks of
draws can be produced with vectorized numpy arithmetic and stay identical to
the scalar stream.  Floats use the top 53 bits.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def substream_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th independent sub-stream of ``seed``."""
    return mix64((mix64(seed & MASK) + (index + 1) * GAMMA) & MASK)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    @classmethod
    def substream(cls, seed: int, index: int) -> "SplitMix64":
        return cls(substream_seed(seed, index))

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK
        return mix64(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` by rejection (no modulo bias)."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span

    def u64_block(self, size: int) -> np.ndarray:
        """The next ``size`` outputs as a uint64 array (same values as ``size`` scalar calls)."""
        steps = np.arange(1, size + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + steps * np.uint64(GAMMA)
            out = _mix64_array(states)
        self.state = (self.state + size * GAMMA) & MASK
        return out

    def random_block(self, size: int) -> np.ndarray:
        return (self.u64_block(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def bernoulli(self, p: float, size: int) -> np.ndarray:
        """``size`` independent coin flips with success probability ``p``."""
        return self.random_block(size) < p
