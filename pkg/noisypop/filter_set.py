"""
The distance filter E: far support points, the membership predicate, and
estimation of (T_mu 1_E)(0)
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from noisypop.config import FAR_CONSTANT, ORACLE_MAX_N
from noisypop.errors import DimensionMismatchError, OracleSizeError
from noisypop.hypercube import BitVec, mask_array, popcount_array
from noisypop.noise import NoiseRate, RateLike, as_noise_rate, make_rng, sample_noise_batch, split_count

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FarSet:
    """
    Support points (translated so the target is the origin) of weight at
    least ``threshold``. E is the set of points no farther from the origin
    than from any far point.
    """

    n: int
    far_points: Tuple[BitVec, ...]
    threshold: int
    mu: NoiseRate
    k: int

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError(f"threshold must be at least 1, got {self.threshold}")
        for p in self.far_points:
            if p.weight < self.threshold:
                raise ValueError(f"{p} has weight {p.weight} below the threshold {self.threshold}")

    @property
    def far_masks(self) -> Tuple[int, ...]:
        return tuple(p.bits for p in self.far_points)


def far_threshold(mu: RateLike, k: int, far_constant: float = FAR_CONSTANT) -> int:
    """s = max(1, ceil((far_constant / mu^2) ln(2k)))."""
    mu = as_noise_rate(mu).mu
    return max(1, math.ceil((far_constant / mu ** 2) * math.log(2 * k)))


def build_far_set(
    support: Sequence[BitVec],
    mu: RateLike,
    k: int,
    far_constant: float = FAR_CONSTANT,
    threshold: Optional[int] = None,
) -> FarSet:
    """
    Collect the far support points

    Args:
        support: Support points, translated so the target is 0^n
        mu: Noise rate
        k: Support size used in the threshold
        far_constant: Constant in front of ln(2k) / mu^2
        threshold: Explicit threshold replacing the rule (the pipeline lowers
            it to r + 1 when it filters points r cannot reach)

    Returns:
        FarSet (possibly with no far points)
    """
    if not support:
        raise ValueError("support is empty")
    rate = as_noise_rate(mu)
    n = support[0].n
    if threshold is None:
        threshold = far_threshold(rate, k, far_constant)
    far = tuple(p for p in support if p.weight >= threshold)
    logger.debug(f"far set: threshold={threshold} far={len(far)} of {len(support)}")
    return FarSet(n=n, far_points=far, threshold=threshold, mu=rate, k=k)


def in_E(y: BitVec, fs: FarSet) -> bool:
    """|y| <= d_H(x_i, y) for every far point x_i."""
    if y.n != fs.n:
        raise DimensionMismatchError(y.n, fs.n)
    weight = y.weight
    return all(weight <= (y.bits ^ m).bit_count() for m in fs.far_masks)


def in_E_batch(ys: np.ndarray, fs: FarSet) -> np.ndarray:
    """Vectorized ``in_E`` over packed masks."""
    ys = np.asarray(ys)
    result = np.ones(len(ys), dtype=bool)
    if not fs.far_points:
        return result
    weights = popcount_array(ys)
    for m in mask_array(list(fs.far_masks), fs.n):
        result &= weights <= popcount_array(ys ^ m)
    return result


def upsilon_samples(epsilon: float, kappa: float) -> int:
    """Two-sided Hoeffding count for a [0, 1] mean: ceil(ln(2/kappa) / (2 eps^2))."""
    if not 0.0 < epsilon < 1.0 or not 0.0 < kappa < 1.0:
        raise ValueError("epsilon and kappa must lie in (0, 1)")
    return math.ceil(math.log(2.0 / kappa) / (2.0 * epsilon ** 2))


def estimate_upsilon(
    fs: FarSet,
    epsilon: float,
    kappa: float,
    seed: int,
    key: Tuple[int, ...] = (),
    workers: int = 1,
) -> float:
    """
    Monte-Carlo estimate of (T_mu 1_E)(0) = Pr_{e ~ D_mu}[e in E]

    Within epsilon of the true value with probability at least 1 - kappa.
    The draws are split into one chunk per worker; chunk j comes from the
    stream (seed, key + (j,)), so the value depends only on seed and workers.
    """
    count = upsilon_samples(epsilon, kappa)
    if not fs.far_points:
        return 1.0

    def work(job: Tuple[int, int]) -> int:
        j, size = job
        noise = sample_noise_batch(fs.mu, fs.n, size, make_rng(seed, tuple(key) + (j,)))
        return int(in_E_batch(noise, fs).sum())

    jobs = list(enumerate(split_count(count, workers)))
    if workers <= 1 or len(jobs) <= 1:
        hits = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(work, jobs))
    value = sum(hits) / count
    logger.debug(f"upsilon: M={count} workers={workers} value={value:.6f}")
    return value


def noise_probabilities(mu: RateLike, n: int) -> np.ndarray:
    """Pr_{D_mu}(e) for every e in {0,1}^n, indexed by mask."""
    if n > ORACLE_MAX_N:
        raise OracleSizeError(n, ORACLE_MAX_N)
    p = as_noise_rate(mu).flip_probability
    weights = popcount_array(np.arange(1 << n, dtype=np.uint64))
    return (p ** weights) * ((1.0 - p) ** (n - weights))


def exact_T_mu_E(x: BitVec, fs: FarSet) -> float:
    """
    (T_mu 1_E)(x) by enumerating every noise vector

    Args:
        x: Evaluation point
        fs: Far set defining E

    Returns:
        sum over e of Pr_{D_mu}(e) 1_E(x xor e)
    """
    if x.n != fs.n:
        raise DimensionMismatchError(x.n, fs.n)
    probs = noise_probabilities(fs.mu, fs.n)
    if not fs.far_points:
        return 1.0
    ys = np.arange(1 << fs.n, dtype=np.uint64) ^ np.uint64(x.bits)
    return float(probs[in_E_batch(ys, fs)].sum())
