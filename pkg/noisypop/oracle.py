"""
Brute-force exact versions of every pipeline quantity, behind size guards.

Everything here enumerates the whole cube (or every LP vertex), so it is only
usable at desk scale. The verify suite and the tests compare the fast paths
against these functions; ``ExactSource`` lets the recovery pipeline run on
exact quantities.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from noisypop.attenuated import CharacterExpansion, EllFunction, Expansion
from noisypop.config import ORACLE_MAX_N
from noisypop.errors import DimensionMismatchError, OracleSizeError
from noisypop.estimators import attenuated_kernel_batch
from noisypop.filter_set import FarSet, exact_T_mu_E, in_E_batch
from noisypop.hypercube import BitVec, SparseDistribution, popcount_array, translate
from noisypop.local_inverse import NoiseMatrix
from noisypop.noise import (
    RateLike,
    apply_T_mu_dense,
    apply_T_mu_subset_dense,
    as_noise_rate,
    coord_kernel,
    multiply_character_dense,
)

logger = logging.getLogger(__name__)


def _guard(n: int, limit: int = ORACLE_MAX_N) -> None:
    if n > limit:
        raise OracleSizeError(n, limit)


def _all_masks(n: int) -> np.ndarray:
    _guard(n)
    return np.arange(1 << n, dtype=np.uint64)


def _character_table(n: int, S: BitVec) -> np.ndarray:
    return 1.0 - 2.0 * (popcount_array(_all_masks(n) & np.uint64(S.bits)) & 1)


@dataclass(frozen=True)
class DenseFunction:
    """A real function on {0,1}^n stored as a table indexed by mask."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        _guard(self.n)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (1 << self.n,):
            raise ValueError(f"table of shape {values.shape} for n = {self.n}")
        object.__setattr__(self, "values", values)

    def __call__(self, x) -> float:
        mask = x.bits if isinstance(x, BitVec) else int(x)
        return float(self.values[mask])

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> "DenseFunction":
        _guard(n)
        return cls(n, np.full(1 << n, float(value)))

    @classmethod
    def character(cls, n: int, S: BitVec) -> "DenseFunction":
        return cls(n, _character_table(n, S))

    @classmethod
    def from_distribution(cls, dist: SparseDistribution) -> "DenseFunction":
        _guard(dist.n)
        values = np.zeros(1 << dist.n)
        for p, w in zip(dist.points, dist.weights):
            values[p.bits] = w
        return cls(dist.n, values)

    @classmethod
    def from_expansion(cls, expansion: Expansion, n: int) -> "DenseFunction":
        return cls(n, expansion.evaluate_many(_all_masks(n)))

    @classmethod
    def indicator_E(cls, fs: FarSet) -> "DenseFunction":
        return cls(fs.n, in_E_batch(_all_masks(fs.n), fs).astype(float))


def exact_fourier(f: DenseFunction, S: BitVec) -> float:
    """f^(S) = sum over x of f(x) chi_S(x)."""
    if S.n != f.n:
        raise DimensionMismatchError(S.n, f.n)
    return float(f.values @ _character_table(f.n, S))


def fourier_table(f: DenseFunction) -> np.ndarray:
    """Every f^(S), indexed by the mask of S; one character row at a time."""
    out = np.zeros(1 << f.n)
    for s in range(1 << f.n):
        out[s] = exact_fourier(f, BitVec(f.n, s))
    return out


def inverse_synthesis(coeffs: np.ndarray, n: int) -> DenseFunction:
    """f(x) = sum over S of 2^{-n} f^(S) chi_S(x)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (1 << n,):
        raise ValueError(f"{coeffs.shape[0]} coefficients for n = {n}")
    values = np.zeros(1 << n)
    for s in np.flatnonzero(coeffs):
        values += coeffs[s] * _character_table(n, BitVec(n, int(s)))
    return DenseFunction(n, values / (1 << n))


def exact_inner_product(a: DenseFunction, b: DenseFunction) -> float:
    if a.n != b.n:
        raise DimensionMismatchError(a.n, b.n)
    return float(a.values @ b.values)


def exact_noisy_law(dist: SparseDistribution, mu: RateLike) -> DenseFunction:
    """The sample law T_mu f as a table."""
    return DenseFunction(dist.n, apply_T_mu_dense(DenseFunction.from_distribution(dist).values, mu))


def exact_g(dist: SparseDistribution, fs: FarSet) -> DenseFunction:
    """
    g(x) = f(x) (T_mu 1_E)(x), zero off the support

    ``dist`` must already be translated so the target sits at the origin,
    the frame ``fs`` was built in.
    """
    if dist.n != fs.n:
        raise DimensionMismatchError(dist.n, fs.n)
    _guard(dist.n)
    values = np.zeros(1 << dist.n)
    for p, w in zip(dist.points, dist.weights):
        values[p.bits] = w * exact_T_mu_E(p, fs)
    return DenseFunction(dist.n, values)


def exact_g_hat(dist: SparseDistribution, S: BitVec, fs: FarSet) -> float:
    return exact_fourier(exact_g(dist, fs), S)


def dense_kernel(z: BitVec, S: BitVec, mu: RateLike, fs: FarSet) -> float:
    """
    <T_{mu,S} X_S T_{mu,S}^{-1} 1_z, 1_E> on the full 2^n table

    Applies the three operators to the whole cube instead of one block.
    """
    if z.n != fs.n or S.n != fs.n:
        raise DimensionMismatchError(z.n, fs.n)
    n = z.n
    _guard(n)
    values = np.zeros(1 << n)
    values[z.bits] = 1.0
    values = apply_T_mu_subset_dense(values, mu, S, inverse=True)
    values = multiply_character_dense(values, S)
    values = apply_T_mu_subset_dense(values, mu, S)
    return float(values @ DenseFunction.indicator_E(fs).values)


def block_operator(size: int, mu: RateLike) -> np.ndarray:
    """
    T_{mu,S} X_S T_{mu,S}^{-1} on one 2^size block, inverting the dense
    forward operator numerically
    """
    _guard(size)
    forward = np.ones((1, 1))
    for _ in range(size):
        forward = np.kron(coord_kernel(as_noise_rate(mu).mu).matrix, forward)
    signs = 1.0 - 2.0 * (popcount_array(np.arange(1 << size, dtype=np.uint64)) & 1)
    return forward @ np.diag(signs) @ np.linalg.inv(forward)


def exact_kernel_expectation(dist: SparseDistribution, S: BitVec, fs: FarSet, mu: RateLike) -> float:
    """E_{z ~ T_mu f} of the attenuated kernel, summed over every z."""
    law = exact_noisy_law(dist, mu)
    masks = _all_masks(dist.n)
    keep = law.values != 0.0
    return float(attenuated_kernel_batch(masks[keep], S, mu, fs) @ law.values[keep])


def character_inner_product(character: CharacterExpansion, dist: SparseDistribution, fs: FarSet) -> float:
    """sum over S of ell_S g^(S) with every g^(S) exact."""
    g = exact_g(dist, fs)
    return float(sum(float(c) * exact_fourier(g, BitVec(dist.n, m)) for m, c in character.support()))


def pointwise_inner_product(ell: EllFunction, dist: SparseDistribution, fs: FarSet) -> float:
    """sum over x of ell(x) g(x)."""
    g = exact_g(dist, fs)
    return exact_inner_product(DenseFunction.from_expansion(ell.character, dist.n), g)


def min_infnorm_by_vertices(A: NoiseMatrix, epsilon: float, tol: float = 1e-9) -> float:
    """
    Optimal ||w||_inf over epsilon-local inverses by enumerating every vertex

    Variables are (w, t); a vertex makes r + 2 of the 4 (r + 1) inequalities
    tight. Only sensible for r <= 3.
    """
    m = A.size
    if m > 5:
        raise OracleSizeError(m - 1, 4)
    eye = np.eye(m)
    ones = np.ones((m, 1))
    zeros = np.zeros((m, 1))
    e0 = np.zeros(m)
    e0[0] = 1.0
    G = np.vstack([
        np.hstack([eye, -ones]),
        np.hstack([-eye, -ones]),
        np.hstack([A.entries, zeros]),
        np.hstack([-A.entries, zeros]),
    ])
    h = np.concatenate([np.zeros(m), np.zeros(m), e0 + epsilon, epsilon - e0])

    best = np.inf
    for rows in itertools.combinations(range(len(G)), m + 1):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        point = np.linalg.solve(sub, h[list(rows)])
        if np.all(G @ point <= h + tol):
            best = min(best, float(point[-1]))
    return best


def exact_upsilon(fs: FarSet) -> float:
    return exact_T_mu_E(BitVec.zeros(fs.n), fs)


class ExactSource:
    """
    Stand-in for a sample source that answers the two pipeline queries
    exactly: <ell, g> and (T_mu 1_E)(0).
    """

    exact = True

    def __init__(self, dist: SparseDistribution, mu: RateLike, offset: Optional[BitVec] = None):
        _guard(dist.n)
        self.dist = dist
        self.rate = as_noise_rate(mu)
        self.offset = offset if offset is not None else BitVec.zeros(dist.n)
        self.drawn = 0

    @property
    def n(self) -> int:
        return self.dist.n

    @property
    def mu(self) -> float:
        return self.rate.mu

    @property
    def frame(self) -> SparseDistribution:
        """The distribution in the current translated frame."""
        return translate(self.dist, self.offset)

    def fork(self, index: int) -> "ExactSource":
        return self

    def shifted(self, offset: BitVec) -> "ExactSource":
        return ExactSource(self.dist, self.rate, self.offset ^ offset)

    def inner_product(self, ell: EllFunction, fs: FarSet) -> float:
        return character_inner_product(ell.character, self.frame, fs)

    def upsilon(self, fs: FarSet) -> float:
        return exact_upsilon(fs)
