"""
Unit tests for far set and filter module
"""

import math

import numpy as np
import pytest

from noisypop.errors import DimensionMismatchError, OracleSizeError
from noisypop.filter_set import (
    FarSet,
    build_far_set,
    estimate_upsilon,
    exact_T_mu_E,
    far_threshold,
    in_E,
    in_E_batch,
    upsilon_samples,
)
from noisypop.hypercube import BitVec, mask_array, random_distribution, translate
from noisypop.noise import NoiseRate, make_rng


def test_threshold_formula():
    assert far_threshold(0.8, 4) == 7
    assert far_threshold(1.0, 1) == 2
    assert far_threshold(0.9, 1, far_constant=0.1) == 1


def test_far_set_examples():
    near = [BitVec.zeros(8), BitVec.from_string("11000000")]
    assert build_far_set(near, 0.8, 2).far_points == ()
    assert build_far_set([BitVec.zeros(8)], 0.5, 1).far_points == ()
    far = BitVec.ones(8)
    fs = build_far_set(near + [far], 0.9, 3)
    assert fs.far_points == (far,)


def test_far_set_invariants():
    with pytest.raises(ValueError):
        FarSet(n=4, far_points=(BitVec.from_string("1000"),), threshold=2, mu=NoiseRate(0.5), k=2)
    with pytest.raises(ValueError):
        FarSet(n=4, far_points=(), threshold=0, mu=NoiseRate(0.5), k=2)


def test_membership():
    far = BitVec.ones(8)
    fs = build_far_set([BitVec.zeros(8), far], 0.9, 2)
    assert in_E(BitVec.zeros(8), fs)
    assert not in_E(far, fs)
    # a tie goes to the target
    assert in_E(BitVec.from_string("11110000"), fs)
    assert not in_E(BitVec.from_string("11111000"), fs)
    with pytest.raises(DimensionMismatchError):
        in_E(BitVec.zeros(4), fs)


def test_empty_far_set_accepts_everything():
    fs = build_far_set([BitVec.zeros(6)], 0.7, 1)
    assert in_E_batch(np.arange(64, dtype=np.uint64), fs).all()
    assert estimate_upsilon(fs, 0.1, 0.1, seed=0) == 1.0
    assert exact_T_mu_E(BitVec.from_string("101010"), fs) == 1.0


def test_batch_matches_scalar():
    rng = make_rng(2)
    dist = random_distribution(10, 5, rng)
    fs = build_far_set(list(translate(dist, dist.points[0]).points), 0.9, 5, far_constant=0.5)
    ys = list(range(1 << 10))
    batch = in_E_batch(mask_array(ys, 10), fs)
    assert batch.tolist() == [in_E(BitVec(10, y), fs) for y in ys]


def test_noiseless_filter_is_indicator():
    fs = build_far_set([BitVec.zeros(8), BitVec.ones(8)], 1.0, 2)
    for y in (0, 0b1111, 0b11111, 0xFF):
        x = BitVec(8, y)
        assert exact_T_mu_E(x, fs) == float(in_E(x, fs))


def test_upsilon_sample_count():
    assert upsilon_samples(0.1, 0.05) == math.ceil(math.log(40) / 0.02)
    with pytest.raises(ValueError):
        upsilon_samples(0.0, 0.1)


def test_upsilon_estimate_near_exact():
    fs = build_far_set([BitVec.zeros(8), BitVec.ones(8)], 0.6, 1)
    exact = exact_T_mu_E(BitVec.zeros(8), fs)
    assert abs(estimate_upsilon(fs, 0.02, 0.01, seed=9) - exact) <= 0.03


@pytest.mark.parametrize("seed", range(20))
def test_lemma_guarantees_exhaustively(seed):
    rng = make_rng(seed)
    n = int(rng.integers(8, 15))
    mu = float(rng.choice([0.6, 0.8, 0.9]))
    dist = random_distribution(n, int(rng.integers(2, 6)), rng)
    fs = build_far_set(list(translate(dist, dist.points[0]).points), mu, dist.k)
    assert exact_T_mu_E(BitVec.zeros(n), fs) >= 0.5
    for p in fs.far_points:
        assert exact_T_mu_E(p, fs) <= math.exp(-(mu ** 2) * p.weight / 2.0) + 1e-12


def test_upsilon_concentration():
    fs = build_far_set([BitVec.zeros(10), BitVec.ones(10), BitVec.from_string("1111111000")], 0.8, 3, far_constant=0.5)
    exact = exact_T_mu_E(BitVec.zeros(10), fs)
    eps, kappa, trials = 0.05, 0.1, 200
    misses = sum(abs(estimate_upsilon(fs, eps, kappa, seed=1000 + t) - exact) > eps for t in range(trials))
    slack = 3 * math.sqrt(kappa * (1 - kappa) / trials)
    assert misses / trials <= kappa + slack


def test_exact_guard():
    fs = build_far_set([BitVec.zeros(21)], 0.5, 1)
    with pytest.raises(OracleSizeError):
        exact_T_mu_E(BitVec.zeros(21), fs)


@pytest.mark.parametrize("workers", [1, 3])
def test_upsilon_depends_on_seed_and_workers_only(workers):
    fs = build_far_set([BitVec.zeros(8), BitVec.ones(8)], 0.6, 1)
    exact = exact_T_mu_E(BitVec.zeros(8), fs)
    a = estimate_upsilon(fs, 0.02, 0.01, seed=4, key=(7,), workers=workers)
    b = estimate_upsilon(fs, 0.02, 0.01, seed=4, key=(7,), workers=workers)
    assert a == b
    assert abs(a - exact) <= 0.03


def test_threshold_override():
    support = [BitVec.zeros(6), BitVec.from_string("100000"), BitVec.from_string("111000")]
    fs = build_far_set(support, 1.0, 3)
    assert fs.threshold == far_threshold(1.0, 3)
    assert not fs.far_points
    lowered = build_far_set(support, 1.0, 3, threshold=1)
    assert lowered.threshold == 1
    assert [str(p) for p in lowered.far_points] == ["100000", "111000"]
