import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oddqw.disorder import (
    ALL_BOUNDARIES,
    AngleProfile,
    BoundaryKind,
    DisorderSpec,
    R_MINUS_PLUS,
    draw_deltas,
    draw_profile,
    profile_from_angles,
    read_profile_csv,
    write_profile_csv,
)
from oddqw.errors import ProfileError


def test_zero_width_box_gives_uniform_angles():
    p = draw_profile(DisorderSpec(5, theta_mean=math.pi / 4, delta_max=0.0))
    assert np.all(p.bulk == math.pi / 4)
    assert p.mean_delta == 0.0


@pytest.mark.parametrize("index", [0, 3, 1234])
def test_same_seed_and_index_is_bitwise_identical(index):
    spec = DisorderSpec(50, 0.1, 0.4, seed=99)
    a = draw_profile(spec, R_MINUS_PLUS, index)
    b = draw_profile(spec, R_MINUS_PLUS, index)
    assert a.angles.tobytes() == b.angles.tobytes()


def test_distinct_indices_differ():
    spec = DisorderSpec(50, 0.0, 0.4, seed=1)
    assert not np.array_equal(draw_deltas(spec, 0), draw_deltas(spec, 1))


def test_moments_of_box_distribution():
    d = 0.4
    n = 10_000
    deltas = draw_deltas(DisorderSpec(n, 0.0, d, seed=5), 0)
    sd = d / math.sqrt(3)
    assert abs(deltas.mean()) < 4 * sd / math.sqrt(n)
    assert abs(deltas.var() / (d * d / 3) - 1) < 0.10


def test_lag_one_autocorrelation_small():
    deltas = draw_deltas(DisorderSpec(20_000, 0.0, 1.0, seed=11), 7)
    x = deltas - deltas.mean()
    r1 = np.dot(x[:-1], x[1:]) / np.dot(x, x)
    assert abs(r1) < 0.05


def test_streams_across_indices_uncorrelated():
    spec = DisorderSpec(20_000, 0.0, 1.0, seed=11)
    a, b = draw_deltas(spec, 0), draw_deltas(spec, 1)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


@given(
    st.integers(1, 300),
    st.floats(0.0, 1.5),
    st.integers(0, 2**64 - 1),
    st.integers(0, 10**6),
)
def test_box_support(n, d, seed, idx):
    deltas = draw_deltas(DisorderSpec(n, 0.0, d, seed), idx)
    assert np.all(np.abs(deltas) <= d)


def test_pinned_first_site_keeps_rest_of_stream():
    base = DisorderSpec(30, 0.0, 0.7, seed=3)
    pinned = DisorderSpec(30, 0.0, 0.7, seed=3, pin_first_site=True)
    a, b = draw_deltas(base, 4), draw_deltas(pinned, 4)
    assert b[0] == 0.0
    assert np.array_equal(a[1:], b[1:])
    p = draw_profile(pinned, R_MINUS_PLUS, 4)
    assert p.mean_delta == pytest.approx(b.mean(), abs=0)


@pytest.mark.parametrize("boundary", ALL_BOUNDARIES)
def test_boundary_angles_exact(boundary):
    p = draw_profile(DisorderSpec(4, 0.2, 0.3), boundary)
    assert abs(p.angles[0]) == math.pi / 2 and abs(p.angles[-1]) == math.pi / 2
    assert p.boundary == boundary


@pytest.mark.parametrize("bad", [dict(n_bulk=0), dict(n_bulk=3, delta_max=-0.1), dict(n_bulk=3, seed=-1)])
def test_invalid_specs_rejected(bad):
    with pytest.raises(ProfileError):
        DisorderSpec(**bad)


def test_non_reflecting_end_rejected():
    with pytest.raises(ProfileError):
        AngleProfile(np.array([0.3, 0.1, math.pi / 2]))
    with pytest.raises(ProfileError):
        BoundaryKind(0, 1)


def test_boundary_parse_roundtrip():
    for b in ALL_BOUNDARIES:
        assert BoundaryKind.parse(b.label()) == b


def test_csv_roundtrip(tmp_path):
    p = draw_profile(DisorderSpec(17, 0.05, 0.9, seed=8), BoundaryKind(1, -1), 2)
    f = tmp_path / "p.csv"
    write_profile_csv(p, f)
    assert f.read_text().splitlines()[0] == "site,theta"
    q = read_profile_csv(f, p.mean_delta)
    assert q == p


def test_tan_vartheta_cached_and_readonly():
    p = profile_from_angles([0.1, -0.2])
    assert np.allclose(p.tan_vartheta, np.tan(np.pi / 4 - np.array([0.1, -0.2]) / 2))
    with pytest.raises(ValueError):
        p.tan_vartheta[0] = 1.0


def test_delocalized_regime_check():
    DisorderSpec(3, 0.5, 1.0).require_delocalized_regime()
    with pytest.raises(ProfileError):
        DisorderSpec(3, 0.6, 1.0).require_delocalized_regime()
