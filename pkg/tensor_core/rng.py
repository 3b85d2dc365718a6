"""
Deterministic pseudo-random number generator.

Algorithm: xorshift64* (Vigna). With 64-bit state x the update is

    x ^= x >> 12
    x ^= x << 25   (mod 2**64)
    x ^= x >> 27
    output = x * 0x2545F4914F6CDD1D   (mod 2**64)

Seeds are expanded with one splitmix64 round so that seed 0 and nearby
seeds give well-mixed, non-zero states. Floats use the top 53 bits of the
output, so draws lie in [0, 1). Pure integer arithmetic keeps sequences
identical on every platform.
"""

from typing import List

import numpy as np

from tensor_core.tensor import Tensor
from utils.errors import ArgumentError

MASK64 = (1 << 64) - 1
MULTIPLIER = 0x2545F4914F6CDD1D
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """One round of splitmix64, used for seeding and deriving streams."""
    z = (value + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Rng:
    """Single-owner xorshift64* generator."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        state = splitmix64(int(seed) & MASK64)
        self.state = state if state != 0 else GOLDEN_GAMMA

    def derive(self, stream: int) -> "Rng":
        """
        Create an independent generator for a numbered sub-stream.

        The result depends only on this generator's current state and the
        stream number; this generator is not advanced.
        """
        return Rng(splitmix64(self.state ^ splitmix64(int(stream) & MASK64)))

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * MULTIPLIER) & MASK64

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ArgumentError(f"below() needs n >= 1, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % n

    def permutation(self, n: int) -> List[int]:
        """Fisher-Yates shuffle of range(n)."""
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            order[i], order[j] = order[j], order[i]
        return order


def uniform(rng: Rng, n: int, lo: float, hi: float) -> Tensor:
    """
    Draw n values uniformly from [lo, hi).

    Args:
        rng: Generator to advance
        n: Number of values
        lo: Lower bound (inclusive)
        hi: Upper bound (exclusive)

    Returns:
        Rank-1 tensor of length n

    Raises:
        ArgumentError: If lo >= hi or n < 0
    """
    if not lo < hi:
        raise ArgumentError(f"uniform needs lo < hi, got lo={lo}, hi={hi}")
    if n < 0:
        raise ArgumentError(f"uniform needs n >= 0, got {n}")
    span = hi - lo
    values = np.empty(n, dtype=np.float64)
    for i in range(n):
        values[i] = lo + span * rng.random()
    return Tensor.wrap(values)


def uniform_matrix(rng: Rng, rows: int, cols: int, lo: float, hi: float) -> Tensor:
    """Row-major [rows x cols] tensor of uniform draws."""
    return uniform(rng, rows * cols, lo, hi).reshape(rows, cols)
