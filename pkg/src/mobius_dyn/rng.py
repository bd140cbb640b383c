"""SplitMix64 counter-based generator.

Output i of stream ``seed`` is ``mix64(seed + (i + 1) * GAMMA mod 2^64)``, so the
sequence is fully specified by the seed and easy to reproduce elsewhere.
Residues mod m are drawn by rejection from the largest multiple of m below
2^64, which keeps them exactly uniform.
"""

from __future__ import annotations

from .errors import DomainError

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GAMMA) & MASK64)

    def below(self, m: int) -> int:
        """Uniform integer in [0, m)."""
        if m < 1:
            raise DomainError("bound must be positive")
        limit = (1 << 64) - (1 << 64) % m
        while True:
            x = self.next_u64()
            if x < limit:
                return x % m

    def sample_distinct(self, lo: int, hi: int, count: int) -> list[int]:
        """``count`` distinct integers from [lo, hi), returned ascending."""
        if count > hi - lo:
            raise DomainError(f"cannot draw {count} distinct values from [{lo}, {hi})")
        seen: set[int] = set()
        while len(seen) < count:
            seen.add(lo + self.below(hi - lo))
        return sorted(seen)
