"""Deterministic sampling for verification runs.

SplitMix64 (Steele/Lea/Flood 2014): a 64-bit counter scrambled through
two xor-shift-multiply rounds.  Chosen over ``random.Random`` so that
verification reports are reproducible bit-for-bit across Python versions
and so the generator can be restated in a few lines in the docs.
"""

_MASK = (1 << 64) - 1


class SplitMix64:
    """Stream of doubles derived from a 64-bit seed."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def uniform01(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform_pm1(self) -> float:
        """Uniform in [-1, 1)."""
        return 2.0 * self.uniform01() - 1.0

    def vector_pm1(self, k: int) -> list:
        return [self.uniform_pm1() for _ in range(k)]
