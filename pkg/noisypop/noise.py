"""
The noise channel: D_mu sampling, noisy-sample sources and the exact
single-coordinate operators T_{mu,i} and T_{mu,i}^{-1}
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from noisypop.config import ORACLE_MAX_N
from noisypop.errors import InsufficientSamplesError, OracleSizeError
from noisypop.hypercube import BitVec, SparseDistribution, mask_array, pack_rows, popcount_array

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseRate:
    """mu in (0, 1]; each bit flips with probability (1 - mu) / 2."""

    mu: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"noise rate must lie in (0, 1], got {self.mu}")

    @property
    def flip_probability(self) -> float:
        return (1.0 - self.mu) / 2.0


RateLike = Union[NoiseRate, float]


def as_noise_rate(mu: RateLike) -> NoiseRate:
    return mu if isinstance(mu, NoiseRate) else NoiseRate(mu)


def make_rng(seed: int, key: Tuple[int, ...] = ()) -> np.random.Generator:
    """Independent generator for the stream named by (seed, key)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def split_count(count: int, workers: int) -> List[int]:
    """Contiguous chunk sizes for ``workers`` workers, largest first."""
    workers = max(1, workers)
    base, extra = divmod(count, workers)
    return [base + (1 if j < extra else 0) for j in range(workers)]


def sample_noise_batch(mu: RateLike, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` noise vectors e ~ D_mu as packed masks."""
    p = as_noise_rate(mu).flip_probability
    bits = rng.random((count, n)) < p
    return pack_rows(bits)


def sample_noise(mu: RateLike, n: int, rng: np.random.Generator) -> BitVec:
    """
    Draw one e ~ D_mu: each bit is 1 independently with probability (1-mu)/2

    Args:
        mu: Noise rate
        n: Dimension
        rng: Seeded generator

    Returns:
        The noise vector
    """
    return BitVec(n, int(sample_noise_batch(mu, n, 1, rng)[0]))


class NoisySampler:
    """
    Samples from T_mu f: pick x by weight, then flip bits with D_mu.

    Single-owner and mutable. Parallel callers take per-worker streams via
    ``spawn`` or ``draw_split``; the stream depends only on (seed, key).
    """

    def __init__(self, dist: SparseDistribution, mu: RateLike, seed: int = 0, key: Tuple[int, ...] = ()):
        self.dist = dist
        self.rate = as_noise_rate(mu)
        self.seed = int(seed)
        self.key = tuple(key)
        self.drawn = 0
        self._calls = 0
        self._rng = make_rng(self.seed, self.key)
        self._points = mask_array(dist.masks, dist.n)
        self._weights = np.asarray(dist.weights, dtype=float)
        self._weights = self._weights / self._weights.sum()

    @property
    def n(self) -> int:
        return self.dist.n

    @property
    def mu(self) -> float:
        return self.rate.mu

    def draw_batch(self, count: int) -> np.ndarray:
        idx = self._rng.choice(self.dist.k, size=count, p=self._weights)
        noise = sample_noise_batch(self.rate, self.n, count, self._rng)
        self.drawn += count
        return self._points[idx] ^ noise

    def draw(self) -> BitVec:
        return BitVec(self.n, int(self.draw_batch(1)[0]))

    def spawn(self, *key: int) -> "NoisySampler":
        return NoisySampler(self.dist, self.rate, self.seed, self.key + tuple(key))

    def fork(self, index: int) -> "NoisySampler":
        """Stream reserved for the ``index``-th recovery target."""
        return self.spawn(index)

    def draw_split(self, count: int, workers: int = 1) -> List[np.ndarray]:
        """Draw ``count`` samples as one chunk per worker, each chunk from its own stream."""
        call = self._calls
        self._calls += 1
        batches = [self.spawn(call, j).draw_batch(size) for j, size in enumerate(split_count(count, workers))]
        self.drawn += count
        return batches

    def shifted(self, offset: BitVec) -> "ShiftedSource":
        return ShiftedSource(self, offset)


class SampleArraySource:
    """A fixed batch of noisy samples (e.g. read from a sample file), served in order."""

    def __init__(self, masks: Sequence[int], n: int, mu: RateLike):
        self.masks = mask_array(list(masks), n)
        self._n = n
        self.rate = as_noise_rate(mu)
        self.drawn = 0

    @property
    def n(self) -> int:
        return self._n

    @property
    def mu(self) -> float:
        return self.rate.mu

    @property
    def remaining(self) -> int:
        return len(self.masks) - self.drawn

    def draw_split(self, count: int, workers: int = 1) -> List[np.ndarray]:
        if count > self.remaining:
            raise InsufficientSamplesError(count, self.remaining)
        batches = []
        start = self.drawn
        for size in split_count(count, workers):
            batches.append(self.masks[start:start + size])
            start += size
        self.drawn += count
        return batches

    def fork(self, index: int) -> "SampleArraySource":
        # every target reuses the full sample set
        return SampleArraySource(list(self.masks), self._n, self.rate)

    def shifted(self, offset: BitVec) -> "ShiftedSource":
        return ShiftedSource(self, offset)


class ShiftedSource:
    """XOR view of another source; turns samples of T_mu f into samples of T_mu f(. xor offset)."""

    def __init__(self, inner, offset: BitVec):
        if offset.n != inner.n:
            raise ValueError(f"offset dimension {offset.n} != source dimension {inner.n}")
        self.inner = inner
        self.offset = offset

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def mu(self) -> float:
        return self.inner.mu

    @property
    def drawn(self) -> int:
        return self.inner.drawn

    def draw_split(self, count: int, workers: int = 1) -> List[np.ndarray]:
        shift = mask_array([self.offset.bits], self.n)[0]
        return [batch ^ shift for batch in self.inner.draw_split(count, workers)]

    def fork(self, index: int) -> "ShiftedSource":
        return ShiftedSource(self.inner.fork(index), self.offset)

    def shifted(self, offset: BitVec) -> "ShiftedSource":
        return ShiftedSource(self.inner, self.offset ^ offset)


def draw_noisy_sample(sampler: NoisySampler) -> BitVec:
    return sampler.draw()


@dataclass(frozen=True)
class CoordKernel:
    """2x2 matrix of a single-coordinate operator; column c is the image of 1_{x_i=c}."""

    matrix: np.ndarray
    inverse: bool = False

    @property
    def norm_1to1(self) -> float:
        return float(np.abs(self.matrix).sum(axis=0).max())


def coord_kernel(mu: float, inverse: bool = False) -> CoordKernel:
    """
    Kernel of T_{mu,i} or of its inverse

    Forward: (1+mu)/2 on the diagonal, (1-mu)/2 off it. The inverse of
    [[a, b], [b, a]] is [[a, -b], [-b, a]] / (a^2 - b^2) and a^2 - b^2 = mu,
    so every column of the inverse has absolute sum (a + b) / mu = 1 / mu.

    Args:
        mu: Noise rate (0 allowed only for the forward kernel)
        inverse: Build T_{mu,i}^{-1} instead of T_{mu,i}

    Returns:
        CoordKernel
    """
    mu = float(mu.mu if isinstance(mu, NoiseRate) else mu)
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"noise rate must lie in [0, 1], got {mu}")
    a = (1.0 + mu) / 2.0
    b = (1.0 - mu) / 2.0
    if not inverse:
        return CoordKernel(np.array([[a, b], [b, a]]))
    if mu == 0.0:
        raise ValueError("T_{mu,i} is singular at mu = 0")
    return CoordKernel(np.array([[a, -b], [-b, a]]) / mu, inverse=True)


def table_dimension(values: np.ndarray) -> int:
    size = len(values)
    n = size.bit_length() - 1
    if size < 1 or (1 << n) != size:
        raise ValueError(f"table length {size} is not a power of two")
    if n > ORACLE_MAX_N:
        raise OracleSizeError(n, ORACLE_MAX_N)
    return n


def _apply_kernel(values: np.ndarray, matrix: np.ndarray, coords: Sequence[int]) -> np.ndarray:
    n = table_dimension(values)
    table = np.asarray(values, dtype=float).reshape((2,) * n)
    for i in coords:
        # coordinate i lives in bit i-1, which is axis n-i of the C-ordered reshape
        axis = n - i
        table = np.moveaxis(np.tensordot(matrix, table, axes=([1], [axis])), 0, axis)
    return table.reshape(-1)


def apply_T_mu_dense(values: np.ndarray, mu: RateLike) -> np.ndarray:
    """Exact T_mu on a dense table indexed by mask; preserves total mass."""
    n = table_dimension(values)
    return _apply_kernel(values, coord_kernel(as_noise_rate(mu).mu).matrix, range(1, n + 1))


def apply_T_mu_subset_dense(values: np.ndarray, mu: RateLike, S: BitVec, inverse: bool = False) -> np.ndarray:
    """T_{mu,S} (or its inverse) on a dense table: the kernel acts on the coordinates of S only."""
    n = table_dimension(values)
    if S.n != n:
        raise ValueError(f"subset dimension {S.n} != table dimension {n}")
    return _apply_kernel(values, coord_kernel(as_noise_rate(mu).mu, inverse).matrix, S.indices())


def multiply_character_dense(values: np.ndarray, S: BitVec) -> np.ndarray:
    """X_S on a dense table: pointwise product with chi_S."""
    n = table_dimension(values)
    idx = np.arange(1 << n, dtype=np.uint64)
    signs = 1.0 - 2.0 * (popcount_array(idx & np.uint64(S.bits)) & 1)
    return np.asarray(values, dtype=float) * signs


def empirical_law(masks: np.ndarray, n: int, count: Optional[int] = None) -> np.ndarray:
    """Histogram of packed samples as a dense probability table."""
    table_dimension(np.zeros(1 << n))
    counts = np.bincount(np.asarray(masks, dtype=np.int64), minlength=1 << n).astype(float)
    return counts / (count if count else counts.sum())
