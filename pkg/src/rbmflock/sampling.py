"""Random index sets: batches (RBM-r), partitions (RBM-1), neighbour draws (MC).

All randomness flows through :class:`RngStream`, addressed by ``(seed, stream_id)``.
Stream 0 is reserved for initial data; replication ``r`` draws batches from
stream ``1 + r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import ConfigError, DomainError

INIT_STREAM = 0

_MASK64 = (1 << 64) - 1


def batch_stream_id(replication: int) -> int:
    return 1 + int(replication)


class RngStream:
    """Reproducible generator for one ``(seed, stream_id)`` address.

    Backed by PCG64 seeded through ``SeedSequence(seed, spawn_key=(stream_id,))``,
    so distinct addresses give independent streams.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def offsets(self, rows: int, n: int, k: int) -> np.ndarray:
        """Fisher-Yates offsets: entry (r, j) uniform on [0, n - j).

        Each entry consumes exactly one 64-bit draw (a 53-bit uniform scaled
        to the range), so one block of rows equals the same rows drawn in
        several calls. Bounded integer draws do not have that property.
        """
        if rows == 0 or k == 0:
            return np.zeros((rows, k), dtype=np.int64)
        hi = (n - np.arange(k, dtype=np.int64)).astype(np.float64)
        u = self.generator.random((rows, k))
        return np.ascontiguousarray(np.minimum(np.floor(u * hi), hi - 1), dtype=np.int64)


@dataclass(frozen=True)
class Batch:
    indices: np.ndarray = field(repr=True)

    @property
    def p(self) -> int:
        return int(len(self.indices))


@dataclass(frozen=True)
class Partition:
    batches: tuple[Batch, ...]
    n: int

    def as_array(self) -> np.ndarray:
        return np.stack([b.indices for b in self.batches])


def _check_np(n: int, p: int) -> None:
    if p < 2 or p > n:
        raise DomainError(f"need 2 <= p <= n, got p={p}, n={n}")


def draw_batches(rng: RngStream, n: int, p: int, m: int) -> np.ndarray:
    """``m`` independent uniform p-subsets of range(n), one sorted row each."""
    _check_np(n, p)
    work = np.arange(n, dtype=np.int64)
    out = np.empty((m, p), dtype=np.int64)
    backend.impl.fisher_yates(work, rng.offsets(m, n, p), out)
    out.sort(axis=1)
    return out


def draw_partitions(rng: RngStream, n: int, p: int, m: int = 1) -> np.ndarray:
    """``m`` uniform equal partitions, shape (m, n // p, p), rows sorted."""
    if p < 2:
        raise DomainError(f"need p >= 2, got {p}")
    if n % p:
        raise ConfigError(f"p={p} must divide N={n} for RBM-1 partitions")
    work = np.arange(n, dtype=np.int64)
    flat = np.empty((m, n), dtype=np.int64)
    # full Fisher-Yates needs n-1 swaps; the last position is forced
    backend.impl.fisher_yates(work, rng.offsets(m, n, n), flat)
    out = flat.reshape(m, n // p, p)
    out.sort(axis=2)
    return out


def draw_mc_neighbors(rng: RngStream, n: int, p: int, m: int = 1) -> np.ndarray:
    """For each of ``m`` windows and each particle i, p-1 distinct indices != i.

    Shape (m, n, p - 1), rows sorted.
    """
    _check_np(n, p)
    q = p - 1
    work = np.arange(n - 1, dtype=np.int64)
    raw = np.empty((m * n, q), dtype=np.int64)
    backend.impl.fisher_yates(work, rng.offsets(m * n, n - 1, q), raw)
    owner = np.tile(np.arange(n, dtype=np.int64), m)[:, None]
    raw += raw >= owner
    raw.sort(axis=1)
    return raw.reshape(m, n, q)


def sample_batch(rng: RngStream, n: int, p: int) -> Batch:
    return Batch(draw_batches(rng, n, p, 1)[0])


def sample_partition(rng: RngStream, n: int, p: int) -> Partition:
    arr = draw_partitions(rng, n, p, 1)[0]
    return Partition(tuple(Batch(row) for row in arr), n)


def sample_mc_neighbors(rng: RngStream, n: int, p: int, i: int) -> np.ndarray:
    _check_np(n, p)
    if not 0 <= i < n:
        raise DomainError(f"index {i} out of range [0, {n})")
    q = p - 1
    work = np.arange(n - 1, dtype=np.int64)
    raw = np.empty((1, q), dtype=np.int64)
    backend.impl.fisher_yates(work, rng.offsets(1, n - 1, q), raw)
    row = raw[0]
    row += row >= i
    row.sort()
    return row


@dataclass(frozen=True)
class BinomialLaw:
    n: int
    prob: float

    @property
    def mean(self) -> float:
        return self.n * self.prob

    @property
    def variance(self) -> float:
        return self.n * self.prob * (1.0 - self.prob)


def selection_count_law(n_steps: int, ratio: float) -> BinomialLaw:
    """Law of how often one index is picked in ``n_steps`` RBM-r draws: Binomial(n, p/N)."""
    if n_steps < 0 or not (0 < ratio <= 1):
        raise DomainError("need n_steps >= 0 and 0 < ratio <= 1")
    return BinomialLaw(int(n_steps), float(ratio))
