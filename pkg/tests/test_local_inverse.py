"""
Unit tests for local inverse module
"""

import math

import numpy as np
import pytest

from noisypop.errors import InfeasibleError, LocalInverseError, LPSolveError
from noisypop.local_inverse import (
    build_noise_matrix,
    compute_local_inverse,
    log_sensitivity_bound,
    max_certified_r,
    normalize_zeroth,
    residual,
    scaled_residual,
    sensitivity,
    shrink_epsilon,
    solve_min_infnorm,
)
from noisypop.oracle import min_infnorm_by_vertices


def test_noise_matrix_rows_are_binomial():
    A = build_noise_matrix(0.3, 6)
    assert A.size == 7
    assert np.allclose(A.entries.sum(axis=1), 1.0, atol=1e-14)
    assert np.allclose(np.triu(A.entries, 1), 0.0)
    assert A.entries[4, 2] == pytest.approx(math.comb(4, 2) * 0.3 ** 2 * 0.7 ** 2)


def test_noise_matrix_argument_checks():
    with pytest.raises(ValueError):
        build_noise_matrix(0.0, 3)
    with pytest.raises(ValueError):
        build_noise_matrix(0.5, -1)


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("r", [5, 10, 20])
def test_local_inverse_grid(delta, r):
    inv = compute_local_inverse(delta, r, 0.1)
    A = build_noise_matrix(delta, r)
    res = residual(A, inv.v)
    assert abs(res[0]) <= 1e-9
    assert np.abs(res).max() <= 0.1 + 1e-9
    assert math.log(inv.sensitivity) <= log_sensitivity_bound(delta, 0.1)
    assert inv.within_bound


def test_r_zero_is_scalar():
    inv = compute_local_inverse(0.3, 0, 0.2)
    assert inv.v.tolist() == pytest.approx([1.0])


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_lp_matches_vertex_enumeration(delta, r):
    A = build_noise_matrix(delta, r)
    assert sensitivity(delta, r, 0.1) == pytest.approx(min_infnorm_by_vertices(A, 0.1), abs=1e-6)


def test_min_infnorm_meets_accuracy():
    A = build_noise_matrix(0.2, 8)
    w = solve_min_infnorm(A, 0.05)
    assert np.abs(residual(A, w)).max() <= 0.05 + 1e-9
    with pytest.raises(ValueError):
        solve_min_infnorm(A, 1.5)


def test_sensitivity_falls_as_epsilon_grows():
    assert sensitivity(0.2, 10, 0.3) <= sensitivity(0.2, 10, 0.05) + 1e-9


def test_normalize_zeroth_rejects_zero_row():
    A = build_noise_matrix(0.5, 2)
    with pytest.raises(LocalInverseError):
        normalize_zeroth(np.zeros(3), A, 0.1)


def test_shrink_epsilon():
    assert shrink_epsilon(0.1) == pytest.approx(0.1 / 1.1)


@pytest.mark.parametrize("r", [4, 5, 6, 7, 8])
def test_default_sizes_are_certified(r):
    # mu = 0.6 gives delta = mu^2 / 16 and eta = 0.1 / 16
    delta, eta = 0.0225, 0.00625
    inv = compute_local_inverse(delta, r, eta)
    res = scaled_residual(build_noise_matrix(delta, r), inv.u)
    assert abs(res[0]) <= 1e-9
    assert np.abs(res).max() <= eta + 1e-9
    assert inv.v == pytest.approx(inv.u / delta ** np.arange(r + 1), rel=1e-12)


def test_default_sizes_reach_r_eight():
    assert max_certified_r(0.0225, 0.00625, 8) == 8
    assert max_certified_r(0.3, 0.1, 0) == 0


def test_solver_failure_names_the_instance(monkeypatch):
    def refuse(*args, **kwargs):
        raise InfeasibleError("phase one ended above zero")

    monkeypatch.setattr("noisypop.local_inverse.simplex_minimize", refuse)
    with pytest.raises(LPSolveError) as info:
        solve_min_infnorm(build_noise_matrix(0.0225, 6), 0.005)
    message = str(info.value)
    assert "r=6" in message
    assert "delta=0.0225" in message
    assert "phase one ended above zero" in message


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_sensitivity_grows_as_epsilon_shrinks(delta, r):
    A = build_noise_matrix(delta, r)
    exact = [min_infnorm_by_vertices(A, eps) for eps in (0.3, 0.1, 0.03)]
    assert np.all(np.diff(exact) >= -1e-9)
    solved = [sensitivity(delta, r, eps) for eps in (0.3, 0.1, 0.03)]
    assert solved == pytest.approx(exact, rel=1e-7, abs=1e-6)


def test_optimum_is_a_vertex():
    # (w, t) has r + 2 coordinates, so the optimum makes at least r + 2 rows tight
    delta, r, eps = 0.25, 3, 0.1
    A = build_noise_matrix(delta, r)
    w = solve_min_infnorm(A, eps)
    t = np.abs(w).max()
    tight_bounds = int(np.sum(np.isclose(np.abs(w), t, rtol=1e-7)))
    tight_residuals = int(np.sum(np.isclose(np.abs(residual(A, w)), eps, atol=1e-7)))
    assert tight_bounds + tight_residuals >= r + 2


def test_normalize_zeroth_rejects_loose_w():
    # A e_0 is the first column (1, 1/2, 1/4), far from a 0.1-local inverse
    A = build_noise_matrix(0.5, 2)
    with pytest.raises(LPSolveError):
        normalize_zeroth(np.array([1.0, 0.0, 0.0]), A, 0.1)
