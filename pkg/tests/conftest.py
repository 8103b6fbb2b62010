"""
Shared fixtures for the noisypop test suite
"""

import numpy as np
import pytest

from noisypop.hypercube import BitVec, SparseDistribution, random_distribution
from noisypop.noise import make_rng


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def planted():
    """n=12, k=4 with weights 0.4, 0.3, 0.2, 0.1; the points are pairwise far apart."""
    points = (
        BitVec.from_string("000000000000"),
        BitVec.from_string("111111110000"),
        BitVec.from_string("000011111111"),
        BitVec.from_string("111100001111"),
    )
    return SparseDistribution(12, points, (0.4, 0.3, 0.2, 0.1))


@pytest.fixture
def small_dist(rng):
    return random_distribution(8, 3, rng)


def random_generators(n, k, max_weight, rng):
    out = []
    for _ in range(k):
        w = int(rng.integers(0, max_weight + 1))
        out.append(BitVec.from_indices(n, [int(i) + 1 for i in rng.choice(n, size=w, replace=False)]))
    return out


@pytest.fixture
def make_generators():
    return random_generators


@pytest.fixture
def dense_random():
    def build(n, seed=0):
        return np.random.default_rng(seed).random(1 << n)
    return build
