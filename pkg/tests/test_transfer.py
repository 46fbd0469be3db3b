import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oddqw.disorder import ALL_BOUNDARIES, BoundaryKind, DisorderSpec, draw_profile, profile_from_angles
from oddqw.errors import ProfileError, SingularCoinError
from oddqw.transfer import (
    basis_change_matrix,
    build_zero_mode,
    closure_residual,
    left_spinor,
    lyapunov,
    lyapunov_of_profile,
    regrouped_spinors,
    right_spinor,
    rotated_basis_residual,
    transfer_at,
    zero_mode_product,
)
from oddqw.walk import WalkState, build_operator, eigenresidual
from oracles import brute_product, brute_transfer, complex_growth_rate, dense_eigenphases, dense_walk_matrix, live_block

angles = st.floats(-1.5, 1.5)
omegas = st.floats(-math.pi, math.pi)


@given(angles, omegas)
def test_unit_determinant(theta, omega):
    assert abs(transfer_at(theta, omega).det - 1) < 1e-12


@given(angles, omegas)
def test_matches_brute_matrix(theta, omega):
    assert np.allclose(transfer_at(theta, omega).entries, brute_transfer(theta, omega), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("theta", [math.pi / 2, -math.pi / 2])
def test_singular_coin_rejected(theta):
    with pytest.raises(SingularCoinError):
        transfer_at(theta, 0.1)


def test_uniform_zero_angles_give_unit_product():
    prod = zero_mode_product(profile_from_angles(np.zeros(7)))
    # tan(pi/4) rounds to 1 - 2**-53 in floating point
    assert prod.lambda_plus == pytest.approx(1.0, abs=1e-14)
    assert prod.lambda_minus == pytest.approx(1.0, abs=1e-14)


def test_near_pole_product_collapses():
    prod = zero_mode_product(profile_from_angles(np.full(40, math.pi / 2 - 1e-9)))
    assert prod.log_lambda_plus < -700


def test_three_site_product_against_brute_force():
    th = [0.1, -0.2, 0.3]
    m = brute_product(th, 0.0)
    # (1, 1) is an eigenvector of every omega = 0 factor
    v = m @ np.array([1.0, 1.0])
    assert v[0] == pytest.approx(v[1], rel=1e-14)
    lam = zero_mode_product(profile_from_angles(th)).lambda_plus
    assert lam == pytest.approx(v[0].real, rel=1e-13)
    assert lam == pytest.approx(np.prod(np.tan(np.pi / 4 - np.array(th) / 2)), rel=1e-14)


def test_clean_zero_mode_is_uniform():
    z = build_zero_mode(profile_from_angles(np.zeros(9)))
    sp = regrouped_spinors(z)
    assert np.allclose(sp, sp[0, 0])


def test_pinned_profile_gives_pinned_state():
    z = build_zero_mode(profile_from_angles([math.pi / 2, 0.1, 0.2]))
    p = z.pairs
    assert p[0, 1] == p[1, 0] == pytest.approx(math.sqrt(0.5), abs=1e-16)
    assert np.count_nonzero(p) == 2


@pytest.mark.parametrize("seed", range(5))
def test_zero_mode_dense_residual(seed):
    prof = draw_profile(DisorderSpec(100, 0.0, 0.4, seed=seed))
    z = build_zero_mode(prof)
    u = dense_walk_matrix(prof.angles)
    assert np.linalg.norm(u @ z.amplitudes - z.amplitudes) < 1e-10
    assert eigenresidual(build_operator(prof), z, 0.0) < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_left_and_right_seeding_agree(seed):
    prof = draw_profile(DisorderSpec(300, 0.0, 1.0, seed=seed))
    a = build_zero_mode(prof, "left").amplitudes
    b = build_zero_mode(prof, "right").amplitudes
    phase = np.vdot(a, b) / abs(np.vdot(a, b))
    assert np.max(np.abs(a * phase - b)) < 1e-10


def test_zero_mode_needs_standard_ends():
    with pytest.raises(ProfileError):
        build_zero_mode(profile_from_angles([0.1], BoundaryKind(1, 1)))


def test_long_chain_stays_finite():
    prof = draw_profile(DisorderSpec(30_000, 0.3, 0.2, seed=1))
    z = build_zero_mode(prof)
    assert np.all(np.isfinite(z.amplitudes)) and z.norm == pytest.approx(1, abs=1e-12)
    assert math.isfinite(closure_residual(prof, 0.3))


@pytest.mark.parametrize("seed", range(6))
def test_closure_zero_at_origin(seed):
    prof = draw_profile(DisorderSpec(60, 0.0, 1.0, seed=seed))
    assert closure_residual(prof, 0.0) < 1e-10


def test_closure_nonzero_off_spectrum_clean_chain():
    prof = profile_from_angles(np.full(12, math.pi / 4))
    levels = dense_eigenphases(prof.angles)
    grid = np.linspace(-3.0, 3.0, 61)
    for w in grid:
        dist = np.min(np.abs(levels - w))
        if dist > 0.02:
            assert closure_residual(prof, w) > 1e-4


@pytest.mark.parametrize("boundary", ALL_BOUNDARIES)
def test_dense_eigenvectors_obey_chain(boundary):
    prof = draw_profile(DisorderSpec(8, 0.2, 0.7, seed=3), boundary)
    u = live_block(dense_walk_matrix(prof.angles))
    ev, vec = np.linalg.eig(u)
    for lam, x in zip(ev, vec.T):
        w = float(np.angle(lam))
        full = np.concatenate(([0], x, [0]))
        sp = regrouped_spinors(WalkState(full / np.linalg.norm(full)))
        for n in range(prof.n_bulk):
            m = brute_transfer(prof.bulk[n], w)
            assert np.allclose(m @ sp[n], sp[n + 1], atol=1e-9)
        # first and last pairs lie along the reflector spinors
        l = left_spinor(prof.angles[0], w)
        r = right_spinor(prof.angles[-1], w)
        assert abs(l[0] * sp[0][1] - l[1] * sp[0][0]) < 1e-9
        assert abs(r[0] * sp[-1][1] - r[1] * sp[-1][0]) < 1e-9
        assert closure_residual(prof, w) < 1e-8


def test_change_of_basis_is_involution():
    p = basis_change_matrix()
    assert np.allclose(p @ p, np.eye(2), rtol=0, atol=3e-16)


def test_single_site_rotated_basis():
    assert rotated_basis_residual(profile_from_angles([0.3]), 0.2) < 1e-12


@given(st.lists(st.floats(-1.4, 1.4), min_size=1, max_size=60), omegas)
def test_rotated_basis_random(th, w):
    assert rotated_basis_residual(profile_from_angles(th), w) < 1e-10


def test_zero_energy_lyapunov_vanishes():
    n = 200_000
    assert abs(lyapunov(DisorderSpec(1, 0.0, 0.4, seed=2), 0.0, n)) < 5 / math.sqrt(n)


def test_gapped_clean_chain_positive_lyapunov():
    assert lyapunov(DisorderSpec(1, math.pi / 4), 0.2, 5000) > 0.05


def test_lyapunov_matches_complex_product():
    prof = draw_profile(DisorderSpec(20_000, 0.0, 0.6, seed=4))
    ref = complex_growth_rate(prof.bulk, 0.05)
    assert lyapunov_of_profile(prof, 0.05) == pytest.approx(ref, abs=2e-3)
