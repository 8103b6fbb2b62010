"""
End-to-end recovery: parameter choice, the far filter, the test function,
the two estimates and their ratio, plus the error-budget audit
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from noisypop.attenuated import EllFunction, build_ell, build_ell_zero, level_values
from noisypop.config import UPSILON_FLOOR
from noisypop.downset import generate_downset
from noisypop.errors import (
    FarSetGuaranteeError,
    InsufficientSamplesError,
    NoisyPopError,
    SampleBudgetError,
    UncoveredSupportError,
)
from noisypop.estimators import estimate_inner_product, inner_product_budget
from noisypop.filter_set import FarSet, build_far_set, estimate_upsilon
from noisypop.hypercube import BitVec
from noisypop.local_inverse import max_certified_r
from noisypop.noise import SampleArraySource
from noisypop.schemas import PointReport, RecoveryConfig, RecoveryReport

logger = logging.getLogger(__name__)

# stream key of the Upsilon draws, apart from every sampler key
UPSILON_STREAM = 1 << 20


@dataclass(frozen=True)
class PipelineParameters:
    delta: float
    eta: float
    r: int
    r_uncapped: int


def uncapped_r(mu: float, k: int, epsilon: float) -> int:
    """ceil((100 / mu^4) ln(1/mu) ln(k/eps)); zero in the noiseless case."""
    if mu >= 1.0:
        return 0
    return math.ceil((100.0 / mu ** 4) * math.log(1.0 / mu) * math.log(k / epsilon))


def choose_parameters(mu: float, k: int, n: int, config: RecoveryConfig) -> PipelineParameters:
    """
    delta = mu^2/16, eta = eps/16 and the capped r, unless overridden

    Without an override r is min(n, max_r, uncapped r), lowered further to
    the largest r with a certified eta-local inverse of A_{delta,r}.

    Args:
        mu: Noise rate
        k: Support size
        n: Dimension
        config: Run configuration

    Returns:
        PipelineParameters
    """
    config.check_dimension(n)
    delta = config.delta_override if config.delta_override is not None else mu ** 2 / 16.0
    eta = config.eta_override if config.eta_override is not None else config.epsilon / 16.0
    r_full = uncapped_r(mu, k, config.epsilon)
    if config.r_override is not None:
        r = config.r_override
    else:
        r = min(n, config.max_r, r_full)
        if config.construction == "ell":
            certified = max_certified_r(delta, eta, r)
            if certified < r:
                logger.warning(f"r lowered from {r} to {certified}, the largest r with a certified local inverse")
            r = certified
    logger.info(f"parameters: delta={delta:.4g} eta={eta:.4g} r={r} (uncapped r={r_full})")
    return PipelineParameters(delta=delta, eta=eta, r=r, r_uncapped=r_full)


def audit_error_budget(ell: EllFunction, r: int, mu: float) -> float:
    """eta + ||ell^||_L1 exp(-mu^2 r / 2): how far <ell, g> may sit from f(0) (T_mu 1_E)(0)."""
    tail = float(ell.character.l1_norm) * math.exp(-(mu ** 2) * r / 2.0)
    bound = ell.eta + tail
    logger.debug(f"audit: interpolation={ell.eta:.6g} tail={tail:.6g} bound={bound:.6g}")
    return bound


def budget_breakdown(ell: EllFunction, r: int, mu: float, epsilon: float) -> Dict[str, float]:
    """
    The pieces the end-to-end error is assembled from

    Returns:
        Dict with the interpolation and tail terms of the audit bound, the
        inner-product and Upsilon accuracies, and their worst-case effect on
        the final ratio (the Upsilon floor is 1/4)
    """
    bound = audit_error_budget(ell, r, mu)
    inner = epsilon / 16.0
    upsilon = epsilon / 8.0
    return {
        "interpolation": ell.eta,
        "tail": bound - ell.eta,
        "audit_bound": bound,
        "inner_product_accuracy": inner,
        "upsilon_accuracy": upsilon,
        "ratio_error": (bound + inner) / UPSILON_FLOOR + upsilon / UPSILON_FLOOR,
    }


def clamp_unit(value: float) -> float:
    return min(1.0, max(0.0, value))


def project_to_simplex(values: Sequence[float]) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1} by the sort-and-threshold rule."""
    v = np.asarray(values, dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - cssv / ind > 0)[0][-1]
    theta = cssv[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _build_test_function(translated: List[BitVec], params: PipelineParameters, construction: str) -> EllFunction:
    nearby = [p for p in translated if p.weight <= params.r]
    ds = generate_downset(nearby)
    logger.info(f"downset: |C|={len(nearby)} |C_down|={len(ds)} max weight={ds.max_weight}")
    if construction == "ell0":
        return build_ell_zero(ds)
    return build_ell(ds, params.delta, params.eta)


def resolve_gap(
    translated: List[BitVec],
    fs: FarSet,
    params: PipelineParameters,
    config: RecoveryConfig,
) -> Tuple[PipelineParameters, FarSet, int]:
    """
    Deal with support points beyond r but below the far threshold

    Such points are neither interpolated nor filtered. r is raised to cover
    them when no r override is set, max_r allows it and the local inverse is
    certified that far. Otherwise, under the "filter" policy the threshold
    drops to r + 1 so they become far points (the Upsilon floor still
    guards the ratio); under "fail" the point is refused.

    Returns:
        (parameters, far set, number of gap points)

    Raises:
        UncoveredSupportError: gap points remain and the policy is "fail"
    """
    gap = [p for p in translated if params.r < p.weight < fs.threshold]
    if not gap:
        return params, fs, 0
    needed = max(p.weight for p in gap)
    n = translated[0].n
    if config.r_override is None and needed <= min(n, config.max_r):
        reach = needed
        if config.construction == "ell":
            reach = max_certified_r(params.delta, params.eta, needed)
        if reach >= needed:
            logger.info(f"r raised from {params.r} to {needed} to cover {len(gap)} point(s) below the far threshold")
            return replace(params, r=needed), fs, len(gap)

    if config.gap_policy == "fail":
        raise UncoveredSupportError(
            f"{len(gap)} support point(s) lie beyond r={params.r} but below the far threshold "
            f"{fs.threshold} and r cannot be raised to {needed}"
        )
    logger.warning(
        f"{len(gap)} support point(s) lie beyond r={params.r} below the far threshold {fs.threshold}; "
        f"filtering them with threshold {params.r + 1}"
    )
    lowered = build_far_set(translated, fs.mu, fs.k, threshold=params.r + 1)
    return params, lowered, len(gap)


def recover_point(
    sampler,
    support: Sequence[BitVec],
    target: BitVec,
    config: RecoveryConfig,
    truth: Optional[float] = None,
    dump_dir: Optional[Path] = None,
) -> Tuple[float, PointReport]:
    """
    Estimate f(target)

    The support is translated so the target is the origin and the sampler is
    wrapped to XOR every sample with the target. The far set and the test
    function are built in that frame, <ell, g> is estimated to eps/16 and
    Upsilon = (T_mu 1_E)(0) to eps/8, each at confidence 1 - kappa/2, and the
    clamped ratio is returned.

    Args:
        sampler: NoisySampler, SampleArraySource or ExactSource
        support: Candidate support (must contain target)
        target: Point whose weight is estimated
        config: Run configuration
        truth: Planted weight, copied into the report row
        dump_dir: Where to write the test function coefficients

    Returns:
        (estimate, report row)

    Raises:
        FarSetGuaranteeError: the Upsilon estimate fell below 1/4
        UncoveredSupportError: points r cannot reach under the "fail" gap policy
        SampleBudgetError: the inner-product budget exceeds the sample limit
    """
    if all(p.bits != target.bits for p in support):
        raise ValueError(f"target {target} is not in the support")
    n = target.n
    mu = sampler.mu
    source = sampler.shifted(target)
    translated = [p ^ target for p in support]

    fs = build_far_set(translated, mu, len(support), config.far_constant)
    params = choose_parameters(mu, len(support), n, config)
    params, fs, gap = resolve_gap(translated, fs, params, config)

    ell = _build_test_function(translated, params, config.construction)
    if dump_dir is not None:
        from noisypop.files import write_ell_csv, write_local_inverse_csv

        write_ell_csv(ell, Path(dump_dir) / f"ell_{target}.csv")
        if ell.v is not None:
            write_local_inverse_csv(ell.v.v, level_values(ell), Path(dump_dir) / f"inverse_{target}.csv")

    eps_inner = config.epsilon / 16.0
    eps_upsilon = config.epsilon / 8.0
    half_kappa = config.kappa / 2.0
    if getattr(source, "exact", False):
        inner = source.inner_product(ell, fs)
        upsilon = source.upsilon(fs)
        samples = required = 0
    else:
        budget = inner_product_budget(mu, ell.character, eps_inner, half_kappa, cap=config.sample_cap)
        logger.info(f"inner product budget: M={budget.samples} (required {budget.required})")
        inner = estimate_inner_product(source, ell, fs, eps_inner, half_kappa, config.workers, budget)
        upsilon = estimate_upsilon(fs, eps_upsilon, half_kappa, config.seed, (UPSILON_STREAM,), config.workers)
        samples, required = budget.samples, budget.required

    if upsilon < UPSILON_FLOOR:
        raise FarSetGuaranteeError(upsilon, UPSILON_FLOOR)

    estimate = clamp_unit(inner / upsilon)
    row = PointReport(
        point=str(target),
        estimate=estimate,
        truth=truth,
        upsilon=upsilon,
        inner_product=inner,
        ell_l1=float(ell.character.l1_norm),
        downset_size=len(ell.downset),
        r=params.r,
        r_uncapped=params.r_uncapped,
        delta=ell.delta,
        eta=ell.eta,
        samples=samples,
        samples_required=required,
        far_points=len(fs.far_points),
        gap_points=gap,
        audit_bound=audit_error_budget(ell, params.r, mu),
    )
    logger.info(f"point {target}: estimate={estimate:.6f} upsilon={upsilon:.6f} inner={inner:.6f}")
    return estimate, row


def _backend(sampler) -> str:
    if getattr(sampler, "exact", False):
        return "exact"
    if isinstance(sampler, SampleArraySource):
        return "samples"
    return "live"


def recover_distribution(
    sampler,
    support: Sequence[BitVec],
    config: RecoveryConfig,
    truth: Optional[Sequence[float]] = None,
    dump_dir: Optional[Path] = None,
) -> RecoveryReport:
    """
    Run ``recover_point`` for every support point, in support order

    A point that fails (Upsilon abort, LP failure, bound violation) is
    recorded in its row and the loop goes on. Running out of file samples is
    an input problem and is raised.
    """
    if not support:
        raise ValueError("support is empty")
    k = len(support)
    rows: List[PointReport] = []
    for index, target in enumerate(support):
        weight = truth[index] if truth is not None else None
        try:
            _, row = recover_point(sampler.fork(index), support, target, config, weight, dump_dir)
        except (InsufficientSamplesError, SampleBudgetError):
            raise
        except NoisyPopError as exc:
            logger.error(f"point {target} failed: {exc}")
            row = PointReport(point=str(target), truth=weight, status="failed", error=str(exc))
        rows.append(row)

    total = sum(r.estimate for r in rows if r.estimate is not None)
    if abs(total - 1.0) > k * config.epsilon:
        logger.warning(f"estimates sum to {total:.4f}; the candidate support may be wrong")

    if config.normalize:
        ok = [j for j, r in enumerate(rows) if r.estimate is not None]
        if ok:
            projected = project_to_simplex([rows[j].estimate for j in ok])
            for j, value in zip(ok, projected):
                rows[j] = rows[j].model_copy(update={"normalized": clamp_unit(float(value))})

    report = RecoveryReport(
        n=support[0].n,
        k=k,
        mu=sampler.mu,
        config=config,
        points=rows,
        estimate_sum=total,
        backend=_backend(sampler),
    )
    logger.info(f"recovered {k - report.failures} of {k} points, estimate sum {total:.6f}")
    return report
