"""Counter-based random substreams and deterministic block-parallel reduction.

Replicas are cut into fixed blocks of ``BLOCK_SIZE``.  Block ``b`` of a run with
seed ``s`` draws from a Philox generator keyed by ``(s, tag, b)``, so a run is
a function of ``(seed, replicas)`` alone and does not depend on how blocks are
spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

BLOCK_SIZE = 8192
SEED_MASK = (1 << 64) - 1

T = TypeVar("T")

# stream tags keep estimators that share a seed on disjoint randomness
TAG_SUP_MGF = 1
TAG_RUIN = 2
TAG_TAIL = 3
TAG_B_QUAD = 4
TAG_B_EXP = 5
TAG_LADDER = 6
TAG_GRID = 7
TAG_TRIPLE = 8
TAG_REFERENCE = 9
TAG_MISC = 15

_default_threads = 1


def set_default_threads(n: int | None) -> None:
    global _default_threads
    _default_threads = max(1, int(n or 1))


def substream(seed: int, block: int, tag: int = 0) -> np.random.Generator:
    if block < 0 or block >= 1 << 48 or tag < 0 or tag >= 1 << 16:
        raise ValueError("block index or tag out of range")
    key = np.array([seed & SEED_MASK, (tag << 48) | block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def blocks(replicas: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """``(block index, size)`` pairs covering ``replicas``."""
    if replicas <= 0:
        return []
    nb = math.ceil(replicas / block_size)
    return [(b, min(block_size, replicas - b * block_size)) for b in range(nb)]


def map_blocks(
    fn: Callable[[np.random.Generator, int, int], T],
    replicas: int,
    seed: int,
    tag: int,
    threads: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Run ``fn(gen, block_index, size)`` on every block; results in block order."""
    work = blocks(replicas, block_size)
    threads = _default_threads if threads is None else max(1, threads)
    threads = min(threads, len(work)) if work else 1

    def run(item):
        b, n = item
        return fn(substream(seed, b, tag), b, n)

    if threads <= 1:
        return [run(w) for w in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, work))


@dataclass(frozen=True)
class Moments:
    """Count, mean and centred sum of squares, mergeable in a fixed order."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, x: np.ndarray) -> "Moments":
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return cls()
        mu = float(x.mean())
        return cls(int(x.size), mu, float(((x - mu) ** 2).sum()))

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    @property
    def std_error(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1)) / math.sqrt(self.n)


def merge_all(parts: Sequence[Moments]) -> Moments:
    acc = Moments()
    for p in parts:
        acc = acc.merge(p)
    return acc
