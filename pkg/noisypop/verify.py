"""
Oracle cross-check suite behind the ``verify`` subcommand.

Every check builds small random instances from one seed, runs the fast path
and the brute-force oracle side by side, and reports pass or fail.
"""

import logging
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List

import numpy as np

from noisypop import downset as downset_mod
from noisypop.attenuated import build_ell, build_ell_zero, level_values, log_ell_norm_bound
from noisypop.config import VERIFY_MAX_N
from noisypop.errors import OracleSizeError
from noisypop.estimators import attenuated_kernel, attenuated_kernel_batch, kernel_matrix
from noisypop.filter_set import build_far_set, exact_T_mu_E
from noisypop.hypercube import BitVec, random_distribution, translate
from noisypop.local_inverse import build_noise_matrix, compute_local_inverse, sensitivity
from noisypop.noise import apply_T_mu_dense, coord_kernel, make_rng
from noisypop.oracle import (
    block_operator,
    character_inner_product,
    dense_kernel,
    exact_g,
    exact_g_hat,
    exact_kernel_expectation,
    exact_upsilon,
    min_infnorm_by_vertices,
    pointwise_inner_product,
)
from noisypop.pipeline import audit_error_budget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_generators(n: int, k: int, max_weight: int, rng: np.random.Generator) -> List[BitVec]:
    """k random points of weight at most ``max_weight``."""
    points = []
    for _ in range(k):
        w = int(rng.integers(0, max_weight + 1))
        points.append(BitVec.from_indices(n, [int(i) + 1 for i in rng.choice(n, size=w, replace=False)]))
    return points


def check_mobius(n: int, rng: np.random.Generator, trials: int = 50) -> str:
    for _ in range(trials):
        ds = downset_mod.generate_downset(_random_generators(n, int(rng.integers(1, 7)), min(n, 6), rng))
        values = [int(v) for v in rng.integers(-50, 51, size=len(ds))]
        back = downset_mod.mobius_transform(ds, downset_mod.zeta_transform(ds, values))
        if back != values:
            raise AssertionError(f"mobius(zeta(f)) != f on a downset of {len(ds)} members")
    return f"{trials} downsets"


def check_local_inverse(n: int, rng: np.random.Generator) -> str:
    eps = 0.1
    for delta in (0.1, 0.25, 0.5):
        for r in (5, 10, 20):
            inv = compute_local_inverse(delta, r, eps)
            if inv.residual > eps + 1e-9:
                raise AssertionError(f"residual {inv.residual} at delta={delta} r={r}")
            A = build_noise_matrix(delta, r)
            if abs((A.entries @ inv.v)[0] - 1.0) > 1e-9:
                raise AssertionError(f"(Av)_0 != 1 at delta={delta} r={r}")
            if not inv.within_bound:
                raise AssertionError(f"sensitivity {inv.sensitivity} above the bound at delta={delta} r={r}")
    for delta in (0.1, 0.25, 0.5):
        for r in (1, 2, 3):
            lp = sensitivity(delta, r, eps)
            brute = min_infnorm_by_vertices(build_noise_matrix(delta, r), eps)
            if abs(lp - brute) > 1e-6:
                raise AssertionError(f"LP optimum {lp} != vertex optimum {brute} at delta={delta} r={r}")
    return "9 grid points, 9 vertex comparisons"


def check_ell(n: int, rng: np.random.Generator, trials: int = 25) -> str:
    for _ in range(trials):
        C = _random_generators(n, int(rng.integers(1, 7)), min(n, 8), rng)
        ds = downset_mod.generate_downset(C)
        delta = float(rng.choice([0.2, 0.3, 0.5]))
        eta = float(rng.choice([0.05, 0.1, 0.2]))
        ell = build_ell(ds, delta, eta)
        monomial = ell.monomial.values_on_downset()
        levels = level_values(ell)
        for y, value in zip(ds.masks, monomial):
            if abs(value - levels[y.bit_count()]) > 1e-8:
                raise AssertionError("monomial and level evaluations disagree")
            if abs(ell.character.evaluate(y) - value) > 1e-8:
                raise AssertionError("character and monomial evaluations disagree")
        if math.log(float(ell.character.l1_norm)) > log_ell_norm_bound(len(C), ds.max_weight, delta, eta) + 1e-9:
            raise AssertionError("||ell^||_L1 above its bound")
        if any(m not in ds for m, _ in ell.character.support()):
            raise AssertionError("character support leaves the downset")

        zero = build_ell_zero(ds, exact=True)
        values = zero.monomial.values_on_downset()
        if values[0] != Fraction(1) or any(v != 0 for v in values[1:]):
            raise AssertionError("ell_0 is not the exact indicator of the origin")
        if float(zero.character.l1_norm) > len(C) * 2 ** ds.max_weight:
            raise AssertionError("||ell_0^||_L1 above k 2^r")
    return f"{trials} test functions"


def check_noise(n: int, rng: np.random.Generator) -> str:
    for mu in (0.3, 0.6, 0.9):
        forward = coord_kernel(mu)
        inverse = coord_kernel(mu, inverse=True)
        if np.abs(forward.matrix @ inverse.matrix - np.eye(2)).max() > 1e-12:
            raise AssertionError(f"kernel inverse fails at mu={mu}")
        if abs(inverse.norm_1to1 - 1.0 / mu) > 1e-12:
            raise AssertionError(f"inverse norm != 1/mu at mu={mu}")
    m = min(n, 8)
    f = rng.random(1 << m)
    lhs = apply_T_mu_dense(apply_T_mu_dense(f, 0.7), 0.5)
    if np.abs(lhs - apply_T_mu_dense(f, 0.35)).max() > 1e-10:
        raise AssertionError("T_mu semigroup property fails")
    return "3 rates, semigroup at n=%d" % m


def check_filter(n: int, rng: np.random.Generator, trials: int = 20) -> str:
    far_total = 0
    for _ in range(trials):
        mu = float(rng.choice([0.6, 0.8, 0.9]))
        dist = random_distribution(n, int(rng.integers(2, 6)), rng)
        target = dist.points[0]
        translated = translate(dist, target)
        fs = build_far_set(list(translated.points), mu, dist.k)
        if exact_upsilon(fs) < 0.5:
            raise AssertionError(f"(T_mu 1_E)(0) = {exact_upsilon(fs)} below 1/2")
        for p in fs.far_points:
            far_total += 1
            if exact_T_mu_E(p, fs) > math.exp(-(mu ** 2) * p.weight / 2.0) + 1e-12:
                raise AssertionError(f"far point {p} keeps too much mass")
    return f"{trials} instances, {far_total} far points"


def check_kernel(n: int, rng: np.random.Generator, trials: int = 200) -> str:
    m = min(n, 10)
    for _ in range(trials):
        mu = float(rng.choice([0.5, 0.7, 0.9]))
        dist = random_distribution(m, 3, rng)
        fs = build_far_set(list(translate(dist, dist.points[0]).points), mu, 3, far_constant=0.5)
        z = BitVec(m, int(rng.integers(0, 1 << m)))
        S = BitVec.from_indices(m, [int(i) + 1 for i in rng.choice(m, size=int(rng.integers(0, 5)), replace=False)])
        value = attenuated_kernel(z, S, mu, fs)
        if abs(value - dense_kernel(z, S, mu, fs)) > 1e-9:
            raise AssertionError(f"kernel disagrees with the dense oracle at z={z} S={S}")
        if abs(value) > mu ** (-S.weight) * (1 + 1e-9):
            raise AssertionError("kernel exceeds (1/mu)^{|S|}")
        if np.abs(kernel_matrix(S.weight, mu) - block_operator(S.weight, mu)).max() > 1e-9:
            raise AssertionError("Kronecker kernel matrix disagrees with the inverted operator")
        batch = attenuated_kernel_batch(np.array([z.bits], dtype=np.uint64), S, mu, fs)[0]
        if abs(batch - value) > 1e-9:
            raise AssertionError("batch kernel disagrees with the butterfly")
    return f"{trials} kernel evaluations at n={m}"


def check_expectations(n: int, rng: np.random.Generator, trials: int = 5) -> str:
    m = min(n, 8)
    for _ in range(trials):
        mu = 0.7
        base = random_distribution(m, 3, rng)
        dist = translate(base, base.points[0])
        fs = build_far_set(list(dist.points), mu, 3, far_constant=0.5)
        for s in range(0, 1 << m, max(1, (1 << m) // 16)):
            S = BitVec(m, s)
            if S.weight > 4:
                continue
            if abs(exact_kernel_expectation(dist, S, fs, mu) - exact_g_hat(dist, S, fs)) > 1e-9:
                raise AssertionError(f"kernel expectation != g^(S) at S={S}")
        C = [p for p in dist.points if p.weight <= 4]
        ell = build_ell(downset_mod.generate_downset(C), 0.3, 0.1)
        lhs = character_inner_product(ell.character, dist, fs)
        rhs = pointwise_inner_product(ell, dist, fs)
        if abs(lhs - rhs) > 1e-9 * max(1.0, float(ell.character.l1_norm)):
            raise AssertionError("sum of ell_S g^(S) != pointwise <ell, g>")
    return f"{trials} instances at n={m}"


def check_error_budget(n: int, rng: np.random.Generator, trials: int = 20) -> str:
    m = min(n, 12)
    for _ in range(trials):
        mu = 0.9
        base = random_distribution(m, int(rng.integers(2, 5)), rng)
        dist = translate(base, base.points[0])
        fs = build_far_set(list(dist.points), mu, dist.k)
        r = min(m, fs.threshold)
        ds = downset_mod.generate_downset([p for p in dist.points if p.weight <= r])
        ell = build_ell(ds, 0.3, 0.1)
        g = exact_g(dist, fs)
        # g(0) = f(0) (T_mu 1_E)(0)
        gap = abs(character_inner_product(ell.character, dist, fs) - g(0))
        if gap > audit_error_budget(ell, r, mu) + 1e-9:
            raise AssertionError(f"<ell, g> misses f(0) Upsilon by {gap}")
    return f"{trials} instances at n={m}"


CHECKS: List[Callable[[int, np.random.Generator], str]] = [
    check_mobius,
    check_local_inverse,
    check_ell,
    check_noise,
    check_filter,
    check_kernel,
    check_expectations,
    check_error_budget,
]


def run_checks(n: int = 10, seed: int = 0) -> List[CheckResult]:
    """
    Run every check on instances of dimension ``n``

    Args:
        n: Instance dimension, at most VERIFY_MAX_N
        seed: Seed of the instance generator

    Returns:
        One CheckResult per check, in a fixed order
    """
    if n > VERIFY_MAX_N:
        raise OracleSizeError(n, VERIFY_MAX_N)
    results = []
    for index, check in enumerate(CHECKS):
        name = check.__name__.replace("check_", "")
        rng = make_rng(seed, (index,))
        start = time.perf_counter()
        try:
            detail = check(n, rng)
            passed = True
        except (AssertionError, ArithmeticError, ValueError) as exc:
            detail = str(exc)
            passed = False
        elapsed = time.perf_counter() - start
        level = logging.INFO if passed else logging.ERROR
        logger.log(level, f"check {name}: {'pass' if passed else 'FAIL'} ({elapsed:.2f}s) {detail}")
        results.append(CheckResult(name=name, passed=passed, detail=detail, seconds=elapsed))
    return results
