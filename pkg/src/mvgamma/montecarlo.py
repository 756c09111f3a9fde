"""Seeded, worker-count independent Monte Carlo plumbing.

Every stochastic routine draws its randomness through :class:`RngSeed`.
Work is cut into fixed-size chunks; chunk ``i`` of a draw keyed by ``key``
always uses the Philox stream ``SeedSequence(seed, spawn_key=(stream, *key, i))``.
Chunks may be evaluated by any number of threads, and the per-sample values
are concatenated in chunk order before reduction, so estimates are
bit-identical for every worker count.
"""

from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

CHUNK_SIZE = 8192


@dataclass(frozen=True)
class RngSeed:
    """A (seed, stream) pair identifying a family of independent substreams."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.stream) < 0:
            raise ValueError("stream index must be nonnegative")

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *map(int, key)))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, k: int) -> RngSeed:
        """Derive a seed for an independent batch, e.g. one side of a comparison."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), 2**31 + int(k)))
        return RngSeed(int(ss.generate_state(1, np.uint64)[0]), 0)


def as_rng(rng) -> RngSeed:
    if isinstance(rng, RngSeed):
        return rng
    if isinstance(rng, (tuple, list)):
        return RngSeed(*rng)
    return RngSeed(int(rng))


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error.

    ``std_error`` is the sample standard deviation divided by sqrt(n).
    """

    value: float
    std_error: float
    n: int
    seed: RngSeed | None = None

    @classmethod
    def from_values(cls, values, seed: RngSeed | None = None) -> MCEstimate:
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        if n == 0:
            raise ValueError("cannot form an estimate from zero samples")
        mean = float(np.mean(values))
        se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
        return cls(mean, se, n, seed)

    @classmethod
    def exact(cls, value: float, seed: RngSeed | None = None) -> MCEstimate:
        return cls(float(value), 0.0, 0, seed)

    def within(self, target: float, k: float = 3.0, extra: float = 0.0) -> bool:
        """True if ``target`` lies inside ``value ± (k·std_error + extra)``."""
        return abs(self.value - target) <= k * self.std_error + extra

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n": self.n,
            "seed": None if self.seed is None else [self.seed.seed, self.seed.stream],
        }


def chunk_sizes(n: int, chunk: int = CHUNK_SIZE) -> list[int]:
    if n <= 0:
        raise ValueError("sample count must be positive")
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    rng: RngSeed,
    *,
    key: tuple[int, ...] = (),
    workers: int = 1,
) -> np.ndarray:
    """Evaluate ``fn(generator, size)`` over all chunks of ``n`` draws.

    Results are concatenated along axis 0 in chunk order.
    """
    rng = as_rng(rng)
    sizes = chunk_sizes(n)
    jobs = [(rng.generator(*key, i), s) for i, s in enumerate(sizes)]
    if workers <= 1 or len(jobs) == 1:
        parts = [fn(g, s) for g, s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts, axis=0)
