"""Portable 64-bit PRNG.

xorshift64* (Vigna 2016): state ^= state >> 12; state ^= state << 25;
state ^= state >> 27; output = state * 0x2545F4914F6CDD1D mod 2**64.
Seeds are scrambled with splitmix64 so that small or zero seeds are fine.
Pure integer arithmetic, so streams are identical on every platform.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

MASK = (1 << 64) - 1
T = TypeVar("T")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed (order-sensitive)."""
    h = 0x243F6A8885A308D3
    for p in parts:
        h = splitmix64(h ^ (int(p) & MASK))
    return h


class XorShift64Star:
    def __init__(self, seed: int):
        s = splitmix64(int(seed) & MASK)
        self.state = s or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = MASK - (MASK + 1) % n
        while True:
            r = self.next_u64()
            if r <= limit:
                return r % n

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.below(len(seq))]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        pool = list(seq)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
