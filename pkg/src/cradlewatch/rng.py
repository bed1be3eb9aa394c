"""Portable deterministic RNG used by the noise generator and the simulator.

xorshift64* with the standard multiplier, fixed to 64-bit wraparound so the
stream is identical on every platform. Doubles take the top 53 bits of each
output word.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_MULTIPLIER = 0x2545F4914F6CDD1D
# xorshift state must be nonzero; seed 0 maps to this fixed odd constant.
_ZERO_SEED_STATE = 0x9E3779B97F4A7C15


class Xorshift64Star:
    def __init__(self, seed: int):
        state = seed & _MASK64
        self._state = state if state != 0 else _ZERO_SEED_STATE

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULTIPLIER) & _MASK64

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_signed(self) -> float:
        """Uniform double in [-1, 1)."""
        return 2.0 * self.uniform() - 1.0
