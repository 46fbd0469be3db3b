import math

import numpy as np
import pytest

from oddqw.counting import count_states
from oddqw.disorder import ALL_BOUNDARIES, BoundaryKind, DisorderSpec, R_MINUS_PLUS, draw_profile, profile_from_angles
from oddqw.errors import ProfileError
from oddqw.special import (
    EXISTS_TOL,
    half_pi_mode_exists,
    half_pi_product,
    half_pi_table,
    near_zero_edge_mode,
    verify_mode,
)
from oracles import brute_product, dense_eigenphases

PP, MP, PM, MM = (BoundaryKind(1, 1), BoundaryKind(-1, 1), BoundaryKind(1, -1), BoundaryKind(-1, -1))


@pytest.mark.parametrize(
    "boundary,n,expected",
    [(PP, 20, True), (MP, 20, False), (PM, 21, True), (MM, 20, True), (PM, 20, False), (PP, 21, False)],
)
def test_parity_rule(boundary, n, expected):
    assert half_pi_mode_exists(boundary, n) is expected


@pytest.mark.parametrize("boundary", ALL_BOUNDARIES)
@pytest.mark.parametrize("n", [4, 5, 10, 11])
def test_rule_matches_dense_spectrum(boundary, n):
    prof = draw_profile(DisorderSpec(n, 0.3, 0.5, seed=n), boundary)
    ph = dense_eigenphases(prof.angles)
    has = bool(np.any(np.abs(np.abs(ph) - math.pi / 2) < 1e-9))
    assert has is half_pi_mode_exists(boundary, n)


def test_table_has_eight_agreeing_cells():
    rows = half_pi_table(n_profiles=10)
    assert len(rows) == 8
    assert all(agree for _, agree, _ in rows)
    for cell, _, margin in rows:
        assert (margin < EXISTS_TOL) is cell.exists


def test_uniform_angles_telescope():
    prod = half_pi_product(profile_from_angles(np.full(12, 0.4)))
    assert abs(prod.log_lambda_plus) < 1e-12


def test_pair_product_matches_closed_form():
    th = np.array([0.2, -0.5, 0.7, 0.1])
    v = np.pi / 4 - th / 2
    # each pair contributes -cot(v_{2m}) tan(v_{2m-1}) on the sigma_y = +1 vector
    closed = np.prod([-np.tan(v[2 * m]) / np.tan(v[2 * m + 1]) for m in range(2)])
    assert half_pi_product(profile_from_angles(th)).lambda_plus == pytest.approx(closed, rel=1e-12)
    m = brute_product(th, math.pi / 2)
    y_plus = np.array([1.0, 1j]) / math.sqrt(2)
    assert np.allclose(m @ y_plus, closed * y_plus, atol=1e-12)


def test_odd_length_rejected():
    with pytest.raises(ValueError):
        half_pi_product(profile_from_angles([0.1, 0.2, 0.3]))


@pytest.mark.parametrize("theta_mean", [0.0, 0.4])
def test_half_pi_product_grows_slowly(theta_mean):
    n = 4000
    logs = [abs(half_pi_product(draw_profile(DisorderSpec(n, theta_mean, 0.5, seed=s))).log_lambda_plus) for s in range(20)]
    # diffusive growth: typical |ln lambda| is of order sqrt(N), not N
    assert 0.05 * math.sqrt(n) < np.median(logs) < 2 * math.sqrt(n)


def test_zero_level_present_only_for_standard_ends():
    prof = draw_profile(DisorderSpec(20, 0.0, 0.5, seed=1), R_MINUS_PLUS)
    assert verify_mode(R_MINUS_PLUS, prof, 0.0) < EXISTS_TOL
    prof = draw_profile(DisorderSpec(20, 0.0, 0.5, seed=1), PP)
    assert verify_mode(PP, prof, 0.0) > 1e-3


def test_verify_mode_checks_boundary():
    prof = draw_profile(DisorderSpec(5, 0.0, 0.5), PP)
    with pytest.raises(ProfileError):
        verify_mode(MM, prof, 0.0)


@pytest.mark.parametrize("n", [6, 12, 20])
def test_edge_mode_for_double_minus_ends(n):
    prof = draw_profile(DisorderSpec(n, math.pi / 4, 0.1, seed=n), MM)
    mode = near_zero_edge_mode(prof)
    assert 0 < mode.omega < 1e-2
    assert mode.residual < 1e-8
    assert mode.next_level > 20 * mode.omega
    dense = dense_eigenphases(prof.angles)
    assert np.min(np.abs(dense - mode.omega)) < 1e-8
    # the level and its mirror at -omega, nothing else nearby
    assert count_states(prof, -2 * mode.omega, 2 * mode.omega) == 2


def test_edge_mode_needs_double_minus():
    with pytest.raises(ProfileError):
        near_zero_edge_mode(profile_from_angles([0.5, 0.5]))
