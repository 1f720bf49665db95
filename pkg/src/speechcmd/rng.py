"""Seeded 64-bit PRNG (splitmix64) used for every random decision.

All shuffling, subsampling, SNR draws and weight initialization go through
``Rng`` so that a run is reproducible from its seed alone, independent of
Python or numpy version.  The generator is the splitmix64 sequence: state
advances by a fixed odd constant and each output is the finalizer mix of
the new state.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive(seed: int, tag: str) -> int:
    """Derive an independent stream seed from (seed, tag).

    Tags keep the pipeline stages (split, augmentation, init, ...) on
    disjoint streams even though they share one user-facing seed.
    """
    h = 0xCBF29CE484222325  # FNV-1a 64 offset basis
    for b in tag.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return _mix((seed ^ h) & _MASK64)


class Rng:
    """splitmix64 stream with uniform doubles, ranges and shuffling."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        # 53-bit mantissa in [0, 1)
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u

    def uniform_array(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """Vectorized equivalent of n uniform() calls (same values)."""
        if n == 0:
            return np.empty(0, dtype=np.float64)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = (np.uint64(self._state) + steps * np.uint64(_GAMMA))
        self._state = int(z[-1])
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return lo + (hi - lo) * u

    def randbelow(self, n: int) -> int:
        """Integer in [0, n). Plain modulo: bias is irrelevant here, a fixed
        reduction rule is what keeps runs reproducible."""
        if n <= 0:
            raise ValueError("randbelow() needs n >= 1")
        return self.next_u64() % n

    def shuffle(self, seq) -> None:
        """In-place Fisher-Yates shuffle (works on lists and 1-D arrays)."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]
