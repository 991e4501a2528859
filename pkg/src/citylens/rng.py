"""Deterministic 64-bit PRNG for reproducible dataset generation.

The generator is splitmix64, defined by its recurrence so any language can
reproduce the stream bit-for-bit:

    state  = (state + 0x9E3779B97F4A7C15) mod 2^64
    z      = state
    z      = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z      = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

Floats take the top 53 bits of an output word, so every derived draw is a
pure function of the seed — no platform or library randomness involved.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_DOUBLE_UNIT = 1.0 / (1 << 53)


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Float in [lo, hi) from the top 53 bits of one output word."""
        return lo + (self.next_u64() >> 11) * _DOUBLE_UNIT * (hi - lo)

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive (modulo reduction; the tiny bias is
        irrelevant here — determinism is the contract, not equidistribution)."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.randint(0, len(seq) - 1)]

    def weighted_choice(self, pairs):
        """Pick from (item, weight) pairs; weights are positive numbers."""
        total = sum(w for _, w in pairs)
        roll = self.uniform(0.0, total)
        acc = 0.0
        for item, w in pairs:
            acc += w
            if roll < acc:
                return item
        return pairs[-1][0]

    def shuffle(self, items: list) -> None:
        """In-place Fisher–Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]

    def split(self) -> "SplitMix64":
        """Independent child generator seeded from this stream."""
        return SplitMix64(self.next_u64())
