"""
Binomial noise matrix A_{delta,r} and its robust local inverse, computed by
linear programming
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from noisypop.config import ZEROTH_TOL
from noisypop.errors import LocalInverseError, LPSolveError
from noisypop.simplex import simplex_minimize

logger = logging.getLogger(__name__)

RESIDUAL_SLACK = 1e-9
# bound rows of the scaled LP lighter than this are dropped
BOUND_ROW_FLOOR = 1e-6


@dataclass(frozen=True)
class NoiseMatrix:
    """
    A(i, j) = C(i, j) delta^j (1 - delta)^(i - j); lower triangular, rows sum to 1.

    ``scaled`` holds B(i, j) = C(i, j) (1 - delta)^(i - j), so that
    A = B diag(delta^j). B is unit lower triangular.
    """

    delta: float
    r: int
    entries: np.ndarray
    scaled: np.ndarray

    @property
    def size(self) -> int:
        return self.r + 1

    @property
    def powers(self) -> np.ndarray:
        """delta^j for j = 0..r."""
        return self.delta ** np.arange(self.size, dtype=float)


@dataclass(frozen=True)
class LocalInverse:
    """
    v with (A v)_0 = 1 and |(A v)_i| <= epsilon for i >= 1.

    ``u`` is v_j delta^j, the form the test function is assembled from.
    """

    v: np.ndarray
    u: np.ndarray
    epsilon: float
    residual: float
    sensitivity: float
    delta: float
    r: int
    log_sensitivity_bound: float
    log_theorem_bound: float

    @property
    def within_bound(self) -> bool:
        if self.sensitivity <= 0.0:
            return True
        return math.log(self.sensitivity) <= self.log_sensitivity_bound + 1e-12


def build_noise_matrix(delta: float, r: int) -> NoiseMatrix:
    """
    Build A_{delta,r}

    Rows come from the weighted Pascal recurrence
    A(i, j) = (1 - delta) A(i-1, j) + delta A(i-1, j-1), which keeps every
    entry in [0, 1] instead of multiplying large binomials by tiny powers.
    B follows B(i, j) = (1 - delta) B(i-1, j) + B(i-1, j-1).

    Args:
        delta: Parameter in (0, 1)
        r: Largest row index

    Returns:
        NoiseMatrix of shape (r+1, r+1)
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    entries = np.zeros((r + 1, r + 1))
    scaled = np.zeros((r + 1, r + 1))
    entries[0, 0] = 1.0
    scaled[0, 0] = 1.0
    for i in range(1, r + 1):
        entries[i, 0] = (1.0 - delta) * entries[i - 1, 0]
        entries[i, 1:i + 1] = (1.0 - delta) * entries[i - 1, 1:i + 1] + delta * entries[i - 1, 0:i]
        scaled[i, 0] = (1.0 - delta) * scaled[i - 1, 0]
        scaled[i, 1:i + 1] = (1.0 - delta) * scaled[i - 1, 1:i + 1] + scaled[i - 1, 0:i]
    return NoiseMatrix(delta=float(delta), r=int(r), entries=entries, scaled=scaled)


def shrink_epsilon(epsilon: float) -> float:
    """Accuracy at which w is solved so that w / alpha_0 meets epsilon."""
    return epsilon / (1.0 + epsilon)


def log_sensitivity_bound(delta: float, epsilon: float) -> float:
    """ln of (2/epsilon)^((2/delta) ln(1/delta)), the checked bound."""
    return (2.0 / delta) * math.log(1.0 / delta) * math.log(2.0 / epsilon)


def log_theorem_bound(delta: float, epsilon: float) -> float:
    """ln of (2/epsilon)^((1/delta) ln(2/delta)), recorded next to the checked one."""
    return (1.0 / delta) * math.log(2.0 / delta) * math.log(2.0 / epsilon)


def residual(A: NoiseMatrix, w: np.ndarray) -> np.ndarray:
    target = np.zeros(A.size)
    target[0] = 1.0
    return A.entries @ w - target


def scaled_residual(A: NoiseMatrix, u: np.ndarray) -> np.ndarray:
    """A w - e_0 computed as B u - e_0 with u_j = delta^j w_j."""
    target = np.zeros(A.size)
    target[0] = 1.0
    return A.scaled @ u - target


def _unscale(A: NoiseMatrix, u: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        w = u * (1.0 / A.delta) ** np.arange(A.size, dtype=float)
    if not np.all(np.isfinite(w)):
        raise LPSolveError(f"local inverse at r={A.r}, delta={A.delta} overflows float")
    return w


def _solve_scaled(A: NoiseMatrix, epsilon: float) -> np.ndarray:
    """
    The min-infnorm LP in the variables u_j = delta^j w_j, tau = delta^r t

    min tau  s.t.  -tau <= delta^(r-j) u_j <= tau,  -epsilon <= (B u - e_0)_i <= epsilon.
    B is unit lower triangular with entries of order one. Bound rows whose
    weight delta^(r-j) is below BOUND_ROW_FLOOR are left out; the caller
    measures the sensitivity of the w it gets back.
    """
    m = A.size
    weights = A.delta ** (A.r - np.arange(m, dtype=float))
    kept = np.flatnonzero(weights >= BOUND_ROW_FLOOR)
    bound = np.zeros((kept.size, m))
    bound[np.arange(kept.size), kept] = weights[kept]
    ones = np.ones((kept.size, 1))
    zeros = np.zeros((m, 1))
    e0 = np.zeros(m)
    e0[0] = 1.0

    a_ub = np.vstack([
        np.hstack([bound, -bound, -ones]),
        np.hstack([-bound, bound, -ones]),
        np.hstack([A.scaled, -A.scaled, zeros]),
        np.hstack([-A.scaled, A.scaled, zeros]),
    ])
    b_ub = np.concatenate([np.zeros(2 * kept.size), e0 + epsilon, epsilon - e0])
    c = np.zeros(2 * m + 1)
    c[-1] = 1.0

    try:
        result = simplex_minimize(c, a_ub, b_ub)
    except LPSolveError as exc:
        raise LPSolveError(
            f"no {epsilon:.4g}-local inverse certified at r={A.r}, delta={A.delta:.4g}: {exc}"
        ) from exc
    u = result.x[:m] - result.x[m:2 * m]
    achieved = float(np.abs(scaled_residual(A, u)).max())
    if achieved > epsilon + RESIDUAL_SLACK:
        raise LPSolveError(
            f"local inverse at r={A.r}, delta={A.delta:.4g} has residual {achieved:.3e} > epsilon {epsilon}"
        )
    logger.debug(f"min-infnorm LP: delta={A.delta} r={A.r} eps={epsilon} ||u||={np.abs(u).max():.6g} pivots={result.pivots}")
    return u


def solve_min_infnorm(A: NoiseMatrix, epsilon: float) -> np.ndarray:
    """
    Minimize ||w||_inf subject to ||A w - e_0||_inf <= epsilon

    Solved in the scaled variables of ``_solve_scaled`` and mapped back.

    Args:
        A: Noise matrix
        epsilon: Accuracy in (0, 1)

    Returns:
        Optimal w

    Raises:
        LPSolveError: no optimum certified, residual above epsilon, or w
            not representable in floating point
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return _unscale(A, _solve_scaled(A, epsilon))


def normalize_zeroth(w: np.ndarray, A: NoiseMatrix, epsilon: float) -> LocalInverse:
    """
    Rescale w so that (A v)_0 = 1

    ``epsilon`` is the final guarantee; w must be an epsilon/(1+epsilon)-local
    inverse, and then every other coordinate of A v is at most epsilon in
    absolute value.

    Raises:
        LocalInverseError: (A w)_0 is zero
        LPSolveError: w misses the pre-shrunk accuracy, or v misses epsilon
    """
    w = np.asarray(w, dtype=float)
    u = w * A.powers
    raw = scaled_residual(A, u)
    alpha0 = float(raw[0] + 1.0)
    if alpha0 == 0.0:
        raise LocalInverseError("(A w)_0 is zero; epsilon >= 1 or the solver failed")
    eps0 = shrink_epsilon(epsilon)
    worst = float(np.abs(raw).max())
    if worst > eps0 + RESIDUAL_SLACK:
        raise LPSolveError(f"w has residual {worst:.3e} at r={A.r}, above the pre-shrunk accuracy {eps0:.3e}")

    v = w / alpha0
    u = u / alpha0
    res = scaled_residual(A, u)
    if abs(res[0]) > ZEROTH_TOL:
        raise LocalInverseError(f"(A v)_0 - 1 = {res[0]:.3e} after normalization")
    achieved = float(np.abs(res[1:]).max(initial=0.0))
    if achieved > epsilon + RESIDUAL_SLACK:
        raise LPSolveError(f"v has residual {achieved:.3e} at r={A.r}, above epsilon {epsilon}")

    sens = float(np.abs(v).max())
    inverse = LocalInverse(
        v=v,
        u=u,
        epsilon=float(epsilon),
        residual=float(np.abs(res).max()),
        sensitivity=sens,
        delta=A.delta,
        r=A.r,
        log_sensitivity_bound=log_sensitivity_bound(A.delta, epsilon),
        log_theorem_bound=log_theorem_bound(A.delta, epsilon),
    )
    if not inverse.within_bound:
        logger.warning(f"sensitivity {sens:.6g} exceeds exp({inverse.log_sensitivity_bound:.3f})")
    return inverse


def compute_local_inverse(delta: float, r: int, epsilon: float) -> LocalInverse:
    """Solve at epsilon/(1+epsilon), then normalize to the epsilon guarantee."""
    A = build_noise_matrix(delta, r)
    w = solve_min_infnorm(A, shrink_epsilon(epsilon))
    inverse = normalize_zeroth(w, A, epsilon)
    logger.info(
        f"local inverse: delta={delta:.4g} r={r} eps={epsilon:.4g} "
        f"sensitivity={inverse.sensitivity:.6g} residual={inverse.residual:.3e}"
    )
    return inverse


@lru_cache(maxsize=128)
def max_certified_r(delta: float, epsilon: float, r_limit: int) -> int:
    """
    Largest r <= r_limit with a certified epsilon-local inverse of A_{delta,r}

    The optimum never decreases with r, so the scan stops at the first
    failure. r = 0 always succeeds.
    """
    best = 0
    for r in range(1, r_limit + 1):
        try:
            compute_local_inverse(delta, r, epsilon)
        except (LPSolveError, LocalInverseError) as exc:
            logger.warning(f"local inverse stops at r={best} (delta={delta:.4g}, eps={epsilon:.4g}): {exc}")
            break
        best = r
    return best


def sensitivity(delta: float, r: int, epsilon: float) -> float:
    """sigma_r(delta, epsilon): the least ||w||_inf over epsilon-local inverses."""
    w = solve_min_infnorm(build_noise_matrix(delta, r), epsilon)
    return float(np.abs(w).max())
