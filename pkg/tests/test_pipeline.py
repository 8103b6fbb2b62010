"""
Unit tests for recovery pipeline module
"""

import math

import numpy as np
import pytest

from noisypop.attenuated import build_ell
from noisypop.downset import generate_downset
from noisypop.errors import (
    FarSetGuaranteeError,
    InsufficientSamplesError,
    SampleBudgetError,
    UncoveredSupportError,
)
from noisypop.filter_set import build_far_set
from noisypop.hypercube import BitVec, SparseDistribution, random_distribution, translate
from noisypop.local_inverse import max_certified_r
from noisypop.noise import NoisySampler, SampleArraySource, make_rng
from noisypop.oracle import ExactSource, character_inner_product, exact_g, exact_upsilon
from noisypop.pipeline import (
    PipelineParameters,
    audit_error_budget,
    budget_breakdown,
    choose_parameters,
    project_to_simplex,
    recover_distribution,
    recover_point,
    resolve_gap,
    uncapped_r,
)
from noisypop.schemas import RecoveryConfig


def test_default_parameters():
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, max_r=12)
    params = choose_parameters(0.6, 4, 20, config)
    assert params.delta == pytest.approx(0.6 ** 2 / 16)
    assert params.eta == pytest.approx(0.1 / 16)
    assert params.r_uncapped == uncapped_r(0.6, 4, 0.1)
    assert params.r == max_certified_r(params.delta, params.eta, 12)
    assert params.r >= 8
    assert choose_parameters(0.6, 4, 5, config).r == 5
    assert uncapped_r(1.0, 4, 0.1) == 0


def test_overrides():
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, delta_override=0.3, eta_override=0.02, r_override=4)
    params = choose_parameters(0.6, 4, 10, config)
    assert (params.delta, params.eta, params.r) == (0.3, 0.02, 4)
    with pytest.raises(ValueError):
        choose_parameters(0.6, 4, 3, config)


def test_audit_formula():
    ell = build_ell(generate_downset([BitVec.from_string("11")]), 0.5, 0.01)
    expected = 0.01 + float(ell.character.l1_norm) * math.exp(-10.0)
    assert audit_error_budget(ell, 20, 1.0) == pytest.approx(expected)
    assert audit_error_budget(ell, 21, 0.7) < audit_error_budget(ell, 20, 0.7)
    parts = budget_breakdown(ell, 20, 1.0, 0.1)
    assert parts["audit_bound"] == pytest.approx(parts["interpolation"] + parts["tail"])


def test_simplex_projection():
    assert project_to_simplex([0.2, 0.3, 0.5]) == pytest.approx([0.2, 0.3, 0.5])
    projected = project_to_simplex([0.5, 0.5, 0.5, -0.2])
    assert projected.sum() == pytest.approx(1.0)
    assert projected.min() >= 0.0


def test_point_mass_noiseless():
    dist = SparseDistribution(6, (BitVec.zeros(6),), (1.0,))
    config = RecoveryConfig(epsilon=0.1, kappa=0.05)
    estimate, row = recover_point(NoisySampler(dist, 1.0, seed=0), list(dist.points), dist.points[0], config)
    assert estimate == pytest.approx(1.0, abs=0.1)
    assert row.upsilon == 1.0
    assert row.far_points == 0


def test_target_must_be_in_support():
    dist = SparseDistribution(4, (BitVec.zeros(4),), (1.0,))
    config = RecoveryConfig(epsilon=0.1, kappa=0.05)
    with pytest.raises(ValueError):
        recover_point(NoisySampler(dist, 0.9), list(dist.points), BitVec.ones(4), config)


def test_translation_invariance():
    dist = SparseDistribution.from_strings([("000000", 0.6), ("110000", 0.4)])
    target = dist.points[1]
    config = RecoveryConfig(epsilon=0.2, kappa=0.1, sample_cap=2000, seed=3)
    a, _ = recover_point(NoisySampler(dist, 0.9, seed=7), list(dist.points), target, config)
    moved = translate(dist, target)
    b, _ = recover_point(NoisySampler(moved, 0.9, seed=7), list(moved.points), BitVec.zeros(6), config)
    assert a == b


def units_around_origin():
    """The origin and the four unit vectors of {0,1}^4, equal weights."""
    return SparseDistribution.from_strings([(s, 0.2) for s in ("0000", "1000", "0100", "0010", "0001")])


def test_upsilon_abort():
    # every unit vector is far, so E shrinks to the origin and (T_mu 1_E)(0) = 0.6^4
    dist = units_around_origin()
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, far_constant=0.01, delta_override=0.3, eta_override=0.1)
    with pytest.raises(FarSetGuaranteeError):
        recover_point(ExactSource(dist, 0.2), list(dist.points), dist.points[0], config)


@pytest.mark.parametrize("seed", range(20))
def test_exact_backend_within_audit_bound(seed):
    rng = make_rng(seed)
    n = 10
    base = random_distribution(n, int(rng.integers(2, 5)), rng)
    mu = 0.9
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, delta_override=0.3, eta_override=0.05)
    fs = build_far_set(list(translate(base, base.points[0]).points), mu, base.k)
    config = config.model_copy(update={"r_override": min(n, fs.threshold)})
    estimate, row = recover_point(ExactSource(base, mu), list(base.points), base.points[0], config)
    slack = row.audit_bound / row.upsilon
    assert abs(estimate - base.weights[0]) <= slack + 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_claim_bound_with_exact_quantities(seed):
    rng = make_rng(50 + seed)
    n = 12
    base = random_distribution(n, int(rng.integers(2, 5)), rng)
    dist = translate(base, base.points[0])
    mu = 0.9
    fs = build_far_set(list(dist.points), mu, dist.k)
    r = min(n, fs.threshold)
    ell = build_ell(generate_downset([p for p in dist.points if p.weight <= r]), 0.3, 0.1)
    inner = character_inner_product(ell.character, dist, fs)
    assert abs(inner - dist.weights[0] * exact_upsilon(fs)) <= audit_error_budget(ell, r, mu) + 1e-9
    assert exact_g(dist, fs)(0) == pytest.approx(dist.weights[0] * exact_upsilon(fs))


def test_recover_distribution_single_point():
    dist = SparseDistribution(5, (BitVec.from_string("10101"),), (1.0,))
    config = RecoveryConfig(epsilon=0.2, kappa=0.1, sample_cap=5000)
    report = recover_distribution(NoisySampler(dist, 0.9, seed=1), list(dist.points), config, truth=[1.0])
    assert report.k == 1
    assert report.points[0].estimate == pytest.approx(1.0, abs=0.2)
    assert report.backend == "live"


def test_recover_distribution_is_reproducible(planted):
    config = RecoveryConfig(epsilon=0.2, kappa=0.1, sample_cap=3000, max_r=4, workers=2, seed=9)
    # at mu = 0.8 the far threshold is 7, so the other planted points are filtered
    a = recover_distribution(NoisySampler(planted, 0.8, seed=9), list(planted.points), config)
    b = recover_distribution(NoisySampler(planted, 0.8, seed=9), list(planted.points), config)
    assert a.model_dump() == b.model_dump()


def test_recover_distribution_records_failures():
    dist = units_around_origin()
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, far_constant=0.01, delta_override=0.3, eta_override=0.1)
    report = recover_distribution(ExactSource(dist, 0.2), list(dist.points), config)
    # seen from a unit vector, E is the half cube missing that coordinate
    assert report.failures == 1
    assert report.points[0].status == "failed"
    assert report.points[0].estimate is None
    assert all(row.status == "ok" for row in report.points[1:])


def test_sample_file_too_short():
    dist = SparseDistribution.from_strings([("0000", 0.5), ("1111", 0.5)])
    source = SampleArraySource([0, 15, 1], 4, 0.8)
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, sample_cap=1000)
    with pytest.raises(InsufficientSamplesError) as info:
        recover_distribution(source, list(dist.points), config)
    assert info.value.required == 1000
    assert info.value.available == 3


def test_normalized_estimates_sum_to_one(planted):
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, normalize=True, max_r=4)
    report = recover_distribution(ExactSource(planted, 0.8), list(planted.points), config)
    assert report.backend == "exact"
    assert sum(row.normalized for row in report.points) == pytest.approx(1.0)


def test_exact_backend_recovers_planted(planted):
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, max_r=4)
    report = recover_distribution(ExactSource(planted, 0.8), list(planted.points), config, truth=list(planted.weights))
    assert report.max_error <= 0.1
    assert report.estimate_sum == pytest.approx(1.0, abs=4 * 0.1)


@pytest.mark.slow
def test_planted_weights_end_to_end(planted):
    # far constant 0.5 puts the threshold at 3, so the weight-8 neighbours are filtered
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, far_constant=0.5, max_r=2, sample_cap=300_000, workers=2)
    hits = 0
    for seed in range(20):
        report = recover_distribution(
            NoisySampler(planted, 0.6, seed=seed),
            list(planted.points),
            config.model_copy(update={"seed": seed}),
            truth=list(planted.weights),
        )
        errors = np.array([abs(r.estimate - r.truth) for r in report.points])
        hits += bool((errors <= 0.1).all())
    assert hits >= 18


@pytest.mark.slow
def test_planted_report_is_deterministic(planted):
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, far_constant=0.5, max_r=2, sample_cap=300_000, workers=3)
    a = recover_distribution(NoisySampler(planted, 0.6, seed=1), list(planted.points), config)
    b = recover_distribution(NoisySampler(planted, 0.6, seed=1), list(planted.points), config)
    assert a.model_dump_json() == b.model_dump_json()


@pytest.mark.parametrize("mu", [0.4, 0.6, 0.8])
@pytest.mark.parametrize("k", [1, 4, 8])
def test_audit_bound_at_uncapped_r(mu, k, make_generators):
    eps = 0.1
    rng = make_rng(int(mu * 10) + k)
    ds = generate_downset(make_generators(8, k, 2, rng))
    ell = build_ell(ds, mu ** 2 / 16.0, eps / 16.0)
    assert audit_error_budget(ell, uncapped_r(mu, k, eps), mu) <= eps / 8.0


def test_default_config_recovers_planted(planted):
    # at mu = 0.6 the far threshold is 12, so the weight-8 neighbours sit below it
    config = RecoveryConfig(epsilon=0.1, kappa=0.05)
    report = recover_distribution(ExactSource(planted, 0.6), list(planted.points), config, truth=list(planted.weights))
    assert report.failures == 0
    assert all(row.status == "ok" for row in report.points)
    assert all(row.gap_points == (0 if row.r >= 8 else 3) for row in report.points)
    assert report.max_error <= 0.1


def noiseless_neighbours():
    return SparseDistribution.from_strings([("000000", 0.5), ("100000", 0.5)])


def test_noiseless_neighbour_is_covered():
    dist = noiseless_neighbours()
    config = RecoveryConfig(epsilon=0.1, kappa=0.05)
    report = recover_distribution(ExactSource(dist, 1.0), list(dist.points), config, truth=list(dist.weights))
    for row in report.points:
        assert row.status == "ok"
        assert row.r >= 1
        assert row.gap_points == 1
        assert row.far_points == 0
        assert row.estimate == pytest.approx(0.5, abs=0.1)


def test_gap_points_filtered_when_r_is_pinned():
    dist = noiseless_neighbours()
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, r_override=0)
    report = recover_distribution(ExactSource(dist, 1.0), list(dist.points), config, truth=list(dist.weights))
    for row in report.points:
        assert row.status == "ok"
        assert row.r == 0
        assert row.far_points == 1
        assert row.estimate == pytest.approx(0.5, abs=0.1)


def test_gap_policy_fail_marks_rows():
    dist = noiseless_neighbours()
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, r_override=0, gap_policy="fail")
    report = recover_distribution(ExactSource(dist, 1.0), list(dist.points), config)
    assert report.failures == 2
    assert all("below the far threshold" in row.error for row in report.points)
    with pytest.raises(UncoveredSupportError):
        recover_point(ExactSource(dist, 1.0), list(dist.points), dist.points[0], config)


def test_resolve_gap():
    translated = list(noiseless_neighbours().points)
    fs = build_far_set(translated, 1.0, 2)
    assert fs.threshold == 3 and not fs.far_points
    params = PipelineParameters(delta=1 / 16, eta=0.1 / 16, r=0, r_uncapped=0)

    raised, same, gap = resolve_gap(translated, fs, params, RecoveryConfig(epsilon=0.1, kappa=0.05))
    assert (raised.r, gap) == (1, 1)
    assert same is fs

    capped = RecoveryConfig(epsilon=0.1, kappa=0.05, max_r=0)
    kept, lowered, gap = resolve_gap(translated, fs, params, capped)
    assert (kept.r, gap) == (0, 1)
    assert lowered.threshold == 1
    assert [str(p) for p in lowered.far_points] == ["100000"]

    covered = PipelineParameters(delta=1 / 16, eta=0.1 / 16, r=2, r_uncapped=0)
    assert resolve_gap(translated, fs, covered, capped) == (covered, fs, 0)


def test_huge_budget_is_refused():
    dist = SparseDistribution.from_strings([("00000000", 0.5), ("11110000", 0.5)])
    config = RecoveryConfig(epsilon=0.1, kappa=0.05, construction="ell0")
    with pytest.raises(SampleBudgetError) as info:
        recover_distribution(NoisySampler(dist, 0.2, seed=0), list(dist.points), config)
    assert info.value.required > info.value.limit
    assert "--sample-cap" in str(info.value)
