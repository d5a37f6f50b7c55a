"""Deterministic random streams.

Scalar decisions (shuffles, subsampling, integer draws) come from a
xoshiro256** generator whose 256-bit state is expanded from ``(seed, label)``
with splitmix64; the label is hashed with FNV-1a so independent purposes
("utterance-split", "context-subsample:p1", ...) get independent streams from
one experiment seed.  Bulk float arrays use splitmix64 in counter mode under a
64-bit key drawn from the owning stream.  Neither path touches numpy's global
RNG, so identical seeds reproduce identical draws regardless of import order,
worker count, or platform.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, (z ^ (z >> 31)) & _MASK64


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Stream:
    """Sequential xoshiro256** stream seeded from ``(seed, label)``."""

    def __init__(self, seed: int, label: str = ""):
        s = (int(seed) & _MASK64) ^ _fnv1a64(label)
        state = []
        for _ in range(4):
            s, word = _splitmix64(s)
            state.append(word)
        self._state = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._state
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._state = [s0, s1, s2, s3]
        return result

    def key(self) -> int:
        """Draw a 64-bit key for a counter-mode bulk array."""
        return self.next_u64()

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def randint_below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.randint_below(hi - lo + 1)

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: Sequence, k: int) -> list:
        """k distinct items, order randomized (partial Fisher-Yates)."""
        n = len(items)
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n} items")
        idx = list(range(n))
        for i in range(k):
            j = i + self.randint_below(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return [items[idx[i]] for i in range(k)]


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def bulk_uniform(key: int, n: int) -> np.ndarray:
    """n doubles in [0, 1) from splitmix64 counter mode under `key`."""
    if n < 0:
        raise ValueError("n must be non-negative")
    counters = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
    z = _mix64(np.uint64(key & _MASK64) + counters)
    return (z >> np.uint64(11)) * 2.0**-53


def bulk_normal(key: int, n: int) -> np.ndarray:
    """n standard normals (Box-Muller over counter-mode uniforms)."""
    m = (n + 1) // 2
    u = bulk_uniform(key, 2 * m)
    radius = np.sqrt(-2.0 * np.log1p(-u[:m]))
    angle = (2.0 * math.pi) * u[m:]
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
