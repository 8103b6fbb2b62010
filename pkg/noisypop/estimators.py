"""
Sample-based estimators: plain Fourier coefficients, attenuated
coefficients g^(S) through the T_{mu,S} X_S T_{mu,S}^{-1} kernel, and the
inner product <ell, g>
"""

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional

import numpy as np

from noisypop.attenuated import CharacterExpansion, EllFunction
from noisypop.config import KERNEL_SUBSET_CAP, MAX_SAMPLES
from noisypop.errors import DimensionMismatchError, SampleBudgetError, SubsetCapError
from noisypop.filter_set import FarSet, in_E_batch
from noisypop.hypercube import BitVec, mask_array, popcount_array
from noisypop.noise import RateLike, as_noise_rate, coord_kernel

logger = logging.getLogger(__name__)

# rows x patterns evaluated at once inside one worker
BLOCK_ENTRIES = 1 << 22
BOUND_SLACK = 1e-9
# beyond this |S| the batch path falls back to one butterfly per sample
DENSE_KERNEL_MAX = 10


def hoeffding_samples(bound: float, epsilon: float, kappa: float) -> int:
    """ceil(2 B^2 ln(2/kappa) / eps^2): mean of [-B, B] values within eps w.p. 1 - kappa."""
    try:
        value = 2.0 * bound ** 2 * math.log(2.0 / kappa) / epsilon ** 2
    except OverflowError:
        return sys.maxsize
    if not math.isfinite(value) or value >= sys.maxsize:
        return sys.maxsize
    return math.ceil(value)


@dataclass(frozen=True)
class EstimatorBudget:
    """
    Per-coefficient accuracy and confidence with the sample count M.

    ``required`` is the count the Hoeffding rule asks for; ``samples`` is what
    is actually drawn and only falls below ``required`` when a cap applies.
    """

    epsilon: float
    kappa: float
    samples: int
    per_s_bound: float
    required: int

    def __post_init__(self):
        if min(self.epsilon, self.kappa, self.per_s_bound) <= 0 or self.samples < 1:
            raise ValueError(f"budget fields must be positive: {self}")
        if self.required < hoeffding_samples(self.per_s_bound, self.epsilon, self.kappa):
            raise ValueError("required sample count is below the Hoeffding rule")

    @property
    def capped(self) -> bool:
        return self.samples < self.required

    @classmethod
    def build(
        cls,
        bound: float,
        epsilon: float,
        kappa: float,
        cap: Optional[int] = None,
        max_samples: int = MAX_SAMPLES,
    ) -> "EstimatorBudget":
        """
        Hoeffding budget, optionally capped

        Raises:
            SampleBudgetError: the count to draw exceeds ``max_samples``
        """
        if not 0.0 < epsilon or not 0.0 < kappa < 1.0:
            raise ValueError("epsilon must be positive and kappa in (0, 1)")
        required = hoeffding_samples(bound, epsilon, kappa)
        samples = required if cap is None else max(1, min(required, int(cap)))
        if samples > max_samples:
            raise SampleBudgetError(required, max_samples)
        if samples < required:
            logger.warning(f"sample budget capped: drawing {samples} of the {required} the bound asks for")
        return cls(epsilon=epsilon, kappa=kappa, samples=samples, per_s_bound=bound, required=required)


def subset_budget(
    mu: RateLike,
    size: int,
    epsilon: float,
    kappa: float,
    cap: Optional[int] = None,
    max_samples: int = MAX_SAMPLES,
) -> EstimatorBudget:
    """Budget for one coefficient of a subset of ``size`` coordinates: values bounded by (1/mu)^size."""
    return EstimatorBudget.build(as_noise_rate(mu).mu ** (-size), epsilon, kappa, cap, max_samples)


def inner_product_budget(
    mu: RateLike,
    character: CharacterExpansion,
    epsilon: float,
    kappa: float,
    cap: Optional[int] = None,
    max_samples: int = MAX_SAMPLES,
) -> EstimatorBudget:
    """
    Budget for <ell, g>: accuracy eps/T per coefficient, confidence split
    uniformly over the support, values bounded by (1/mu)^{S_0}.

    The resulting M equals ceil(2 (T/eps)^2 (1/mu)^{2 S_0} ln(2 |supp| / kappa)).
    """
    T = float(character.l1_norm)
    support = max(1, len(character.support()))
    return EstimatorBudget.build(
        as_noise_rate(mu).mu ** (-character.max_degree),
        epsilon / T,
        kappa / support,
        cap,
        max_samples,
    )


@dataclass(frozen=True)
class GHatEstimate:
    S: BitVec
    value: float
    budget: EstimatorBudget

    def __post_init__(self):
        if abs(self.value) > self.budget.per_s_bound * (1.0 + BOUND_SLACK):
            raise ValueError(f"estimate {self.value} exceeds the value bound {self.budget.per_s_bound}")


def _butterfly(vec: np.ndarray, matrix: np.ndarray, size: int) -> np.ndarray:
    """Apply ``matrix`` to every one of ``size`` tensor coordinates of a 2^size vector."""
    out = vec.copy()
    for j in range(size):
        view = out.reshape(-1, 2, 1 << j)
        low = view[:, 0, :].copy()
        high = view[:, 1, :].copy()
        view[:, 0, :] = matrix[0, 0] * low + matrix[0, 1] * high
        view[:, 1, :] = matrix[1, 0] * low + matrix[1, 1] * high
    return out


def _pattern_signs(size: int) -> np.ndarray:
    return 1.0 - 2.0 * (popcount_array(np.arange(1 << size, dtype=np.uint64)) & 1)


def _gather(masks, coords: List[int]) -> np.ndarray:
    """Pattern index of each mask restricted to ``coords`` (coords[j] -> bit j)."""
    masks = np.asarray(masks)
    out = np.zeros(len(masks), dtype=np.int64)
    one = 1 if masks.dtype == object else np.uint64(1)
    for j, c in enumerate(coords):
        shift = c - 1 if masks.dtype == object else np.uint64(c - 1)
        out |= ((masks >> shift) & one).astype(np.int64) << j
    return out


def _scatter(base: int, coords: List[int], n: int) -> np.ndarray:
    """Masks of the block {y : y agrees with base off coords}, indexed by pattern."""
    patterns = list(range(1 << len(coords)))
    masks = []
    for p in patterns:
        y = base
        for j, c in enumerate(coords):
            if (p >> j) & 1:
                y |= 1 << (c - 1)
        masks.append(y)
    return mask_array(masks, n)


def attenuated_kernel(z: BitVec, S: BitVec, mu: RateLike, fs: FarSet, subset_cap: int = KERNEL_SUBSET_CAP) -> float:
    """
    <T_{mu,S} X_S T_{mu,S}^{-1} 1_z, 1_E>

    The image of 1_z lives on the 2^{|S|} points agreeing with z off S. It is
    built by three tensor passes over that block: inverse kernels, the
    character signs, forward kernels. Its absolute value is at most
    (1/mu)^{|S|}.

    Args:
        z: Sample point
        S: Subset
        mu: Noise rate
        fs: Far set defining E
        subset_cap: Largest |S| accepted

    Returns:
        The kernel value
    """
    if z.n != S.n:
        raise DimensionMismatchError(z.n, S.n)
    coords = S.indices()
    size = len(coords)
    if size > subset_cap:
        raise SubsetCapError(f"|S| = {size} exceeds the cap {subset_cap}")
    rate = as_noise_rate(mu)

    vec = np.zeros(1 << size)
    vec[int(_gather(mask_array([z.bits], z.n), coords)[0])] = 1.0
    vec = _butterfly(vec, coord_kernel(rate.mu, inverse=True).matrix, size)
    vec *= _pattern_signs(size)
    vec = _butterfly(vec, coord_kernel(rate.mu).matrix, size)

    block = _scatter(z.bits & ~S.bits, coords, z.n)
    return float(vec[in_E_batch(block, fs)].sum())


@lru_cache(maxsize=64)
def kernel_matrix(size: int, mu: float) -> np.ndarray:
    """
    Dense 2^size x 2^size matrix of T_{mu,S} X_S T_{mu,S}^{-1} on one block

    It is the Kronecker power of the per-coordinate operator
    K D K^{-1} with D = diag(1, -1).
    """
    forward = coord_kernel(mu).matrix
    inverse = coord_kernel(mu, inverse=True).matrix
    step = forward @ np.diag([1.0, -1.0]) @ inverse
    out = np.ones((1, 1))
    for _ in range(size):
        out = np.kron(step, out)
    out.setflags(write=False)
    return out


def attenuated_kernel_batch(zs: np.ndarray, S: BitVec, mu: RateLike, fs: FarSet) -> np.ndarray:
    """``attenuated_kernel`` for every packed sample in ``zs``, in row chunks."""
    zs = np.asarray(zs)
    size = S.weight
    if size > KERNEL_SUBSET_CAP:
        raise SubsetCapError(f"|S| = {size} exceeds the cap {KERNEL_SUBSET_CAP}")
    if size > DENSE_KERNEL_MAX:
        return np.array([attenuated_kernel(BitVec(S.n, int(z)), S, mu, fs) for z in zs])
    step = max(1, BLOCK_ENTRIES >> size)
    if len(zs) <= step:
        return _kernel_rows(zs, S, mu, fs)
    return np.concatenate([_kernel_rows(zs[i:i + step], S, mu, fs) for i in range(0, len(zs), step)])


def _kernel_rows(zs: np.ndarray, S: BitVec, mu: RateLike, fs: FarSet) -> np.ndarray:
    coords = S.indices()
    size = len(coords)
    matrix = kernel_matrix(size, as_noise_rate(mu).mu)
    columns = matrix[:, _gather(zs, coords)].T
    if not fs.far_points:
        return columns.sum(axis=1)

    is_object = zs.dtype == object
    outside = ~S.bits & ((1 << S.n) - 1)
    outside = outside if is_object else np.uint64(outside)
    patterns = np.arange(1 << size, dtype=np.uint64)
    pattern_weight = popcount_array(patterns)
    base_weight = popcount_array(zs & outside)

    inside = np.ones(columns.shape, dtype=bool)
    for far in fs.far_masks:
        far_scalar = far if is_object else np.uint64(far)
        far_pattern = np.uint64(int(_gather(mask_array([far], S.n), coords)[0]))
        off_block = popcount_array((zs ^ far_scalar) & outside)
        on_block = popcount_array(patterns ^ far_pattern)
        inside &= (base_weight[:, None] + pattern_weight[None, :]) <= (off_block[:, None] + on_block[None, :])
    return (columns * inside).sum(axis=1)


def _collapse(batch: np.ndarray):
    """Distinct samples with multiplicities; kernel values depend only on the mask."""
    if len(batch) == 0:
        return batch, np.zeros(0)
    uniq, counts = np.unique(batch, return_counts=True)
    return uniq, counts.astype(float)


def _weighted_sums(batch: np.ndarray, evaluate: Callable[[np.ndarray], np.ndarray]) -> float:
    uniq, counts = _collapse(batch)
    if len(uniq) == 0:
        return 0.0
    return float(evaluate(uniq) @ counts)


def _parallel_sums(batches: List[np.ndarray], work: Callable[[np.ndarray], np.ndarray], workers: int) -> np.ndarray:
    """Run ``work`` on every batch and add the partial results in batch order."""
    if workers <= 1 or len(batches) <= 1:
        partials = [work(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(work, batches))
    total = np.zeros_like(np.asarray(partials[0], dtype=float))
    for part in partials:
        total = total + np.asarray(part, dtype=float)
    return total


def estimate_fourier(sampler, S: BitVec, budget: EstimatorBudget, workers: int = 1) -> float:
    """
    f^(S) = mu^{-|S|} E_{z ~ T_mu f} chi_S(z), averaged over M samples

    Args:
        sampler: Source of noisy samples
        S: Subset
        budget: Sample budget (per_s_bound should be (1/mu)^{|S|})
        workers: Worker threads

    Returns:
        The estimate
    """
    scale = sampler.mu ** (-S.weight)
    batches = sampler.draw_split(budget.samples, workers)

    def work(batch: np.ndarray) -> np.ndarray:
        def signs(zs):
            s_mask = S.bits if zs.dtype == object else np.uint64(S.bits)
            return 1.0 - 2.0 * (popcount_array(zs & s_mask) & 1)
        return np.array([_weighted_sums(batch, signs)])

    value = float(_parallel_sums(batches, work, workers)[0]) * scale / budget.samples
    logger.debug(f"fourier,{S.bits},{value:.10g},{budget.samples},{budget.epsilon:.6g}")
    return value


def estimate_g_hat(sampler, S: BitVec, fs: FarSet, budget: EstimatorBudget, workers: int = 1) -> GHatEstimate:
    """Mean of the attenuated kernel over M fresh samples of T_mu f."""
    batches = sampler.draw_split(budget.samples, workers)

    def work(batch: np.ndarray) -> np.ndarray:
        return np.array([_weighted_sums(batch, lambda zs: attenuated_kernel_batch(zs, S, sampler.mu, fs))])

    value = float(_parallel_sums(batches, work, workers)[0]) / budget.samples
    logger.debug(f"g_hat,{S.bits},{value:.10g},{budget.samples},{budget.epsilon:.6g}")
    return GHatEstimate(S=S, value=value, budget=budget)


def estimate_inner_product(
    sampler,
    ell: EllFunction,
    fs: FarSet,
    epsilon: float,
    kappa: float,
    workers: int = 1,
    budget: Optional[EstimatorBudget] = None,
) -> float:
    """
    <ell, g> = sum over S in supp(ell^) of ell_S g^(S)

    One batch of samples is shared by every S; each g^(S) gets accuracy
    eps/T and confidence kappa/|supp|, so the total error is at most eps
    with probability at least 1 - kappa.

    Args:
        sampler: Source of noisy samples (already shifted to the target)
        ell: Test function with its character form built
        fs: Far set defining E
        epsilon: Target accuracy of the inner product
        kappa: Failure probability
        workers: Worker threads
        budget: Precomputed budget (e.g. capped); derived from ell if omitted

    Returns:
        The estimate
    """
    if budget is None:
        budget = inner_product_budget(sampler.mu, ell.character, epsilon, kappa)
    n = fs.n
    terms = [(BitVec(n, m), float(c)) for m, c in ell.character.support()]
    batches = sampler.draw_split(budget.samples, workers)

    def work(batch: np.ndarray) -> np.ndarray:
        uniq, counts = _collapse(batch)
        sums = np.zeros(len(terms))
        if len(uniq) == 0:
            return sums
        for t, (S, _) in enumerate(terms):
            sums[t] = float(attenuated_kernel_batch(uniq, S, sampler.mu, fs) @ counts)
        return sums

    g_hat = _parallel_sums(batches, work, workers) / budget.samples
    for (S, c), value in zip(terms, g_hat):
        logger.debug(f"g_hat,{S.bits},{value:.10g},{budget.samples},{budget.epsilon:.6g}")
    coeffs = np.array([c for _, c in terms])
    estimate = float(coeffs @ g_hat)
    logger.info(f"inner product: |supp|={len(terms)} M={budget.samples} value={estimate:.6f}")
    return estimate
