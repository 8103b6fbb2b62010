"""
Unit tests for downset module
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from noisypop.downset import generate_downset, mobius_transform, submasks, zeta_transform
from noisypop.errors import DimensionMismatchError
from noisypop.hypercube import BitVec
from noisypop.noise import make_rng


def test_submasks_of_a_mask():
    assert sorted(submasks(0b101)) == [0b000, 0b001, 0b100, 0b101]
    assert list(submasks(0)) == [0]


def test_downset_of_one_point():
    ds = generate_downset([BitVec.from_string("1101")])
    assert len(ds) == 8
    assert ds.masks[0] == 0
    assert ds.max_weight == 3
    assert BitVec.from_string("0100") in ds
    assert BitVec.from_string("0010") not in ds


def test_downset_merges_generators():
    ds = generate_downset([BitVec.from_string("110"), BitVec.from_string("011")])
    assert sorted(ds.masks) == [0b000, 0b001, 0b010, 0b011, 0b100, 0b110]
    weights = [m.bit_count() for m in ds.masks]
    assert weights == sorted(weights)
    assert ds.position(0) == 0


def test_downset_rejects_mixed_dimensions():
    with pytest.raises(DimensionMismatchError):
        generate_downset([BitVec.zeros(3), BitVec.zeros(4)])
    with pytest.raises(ValueError):
        generate_downset([])


def test_zeta_of_indicator_counts_supersets():
    ds = generate_downset([BitVec.from_string("111")])
    ones = [1] * len(ds)
    assert zeta_transform(ds, ones) == [2 ** (3 - m.bit_count()) for m in ds.masks]


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_mobius_inverts_zeta_exactly(seed):
    rng = make_rng(seed)
    n = int(rng.integers(4, 17))
    gens = []
    for _ in range(int(rng.integers(1, 7))):
        w = int(rng.integers(0, min(n, 6) + 1))
        gens.append(BitVec.from_indices(n, [int(i) + 1 for i in rng.choice(n, size=w, replace=False)]))
    ds = generate_downset(gens)
    values = [int(v) for v in rng.integers(-100, 101, size=len(ds))]
    assert mobius_transform(ds, zeta_transform(ds, values)) == values
    assert zeta_transform(ds, mobius_transform(ds, values)) == values


def test_transforms_keep_fractions_exact():
    ds = generate_downset([BitVec.from_string("11")])
    values = [Fraction(1, 3), Fraction(-2, 7), Fraction(5), Fraction(0)]
    assert mobius_transform(ds, zeta_transform(ds, values)) == values


def test_length_mismatch():
    ds = generate_downset([BitVec.from_string("1")])
    with pytest.raises(ValueError):
        zeta_transform(ds, [1, 2, 3])


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_signed_interval_sums_vanish(seed):
    rng = make_rng(seed)
    n = 8
    gens = []
    for _ in range(int(rng.integers(1, 5))):
        w = int(rng.integers(0, 5))
        gens.append(BitVec.from_indices(n, [int(i) + 1 for i in rng.choice(n, size=w, replace=False)]))
    ds = generate_downset(gens)
    for x in ds.masks:
        for z in ds.masks:
            if z == x or z & x != x:
                continue
            total = sum(-1 if (y & ~x).bit_count() & 1 else 1 for y in ds.masks if y & x == x and z & y == y)
            assert total == 0


def test_mobius_of_empty_set_indicator_on_square():
    ds = generate_downset([BitVec.from_string("11")])
    assert len(ds) == 4
    assert mobius_transform(ds, [1, 0, 0, 0]) == [1, 0, 0, 0]


def test_mobius_on_a_chain():
    ds = generate_downset([BitVec.from_string("10")])
    assert ds.masks[0] == 0 and len(ds) == 2
    a, b = Fraction(3, 7), Fraction(1, 5)
    assert mobius_transform(ds, [a, b]) == [a - b, b]
