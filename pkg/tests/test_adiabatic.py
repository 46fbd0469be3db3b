import math

import numpy as np
import pytest

from oddqw.adiabatic import (
    ProtocolKind,
    ProtocolSpec,
    angle_schedule,
    evolve_protocol,
    final_states,
    lambda_for_duration,
    theta_tilde,
)
from oddqw.disorder import DisorderSpec, draw_deltas
from oddqw.errors import ProfileError
from oddqw.transfer import build_zero_mode
from oddqw.walk import build_operator, eigenresidual, pinned_state

RAMP_DISORDER = DisorderSpec(18, 0.0, 0.7, seed=0, pin_first_site=True)


def exp_spec(T=90, disorder=RAMP_DISORDER):
    return ProtocolSpec(ProtocolKind.EXPONENTIAL, T, disorder)


@pytest.mark.parametrize("T,expected,digits", [(90, 0.0562, 4), (180, 0.0281, 4), (240, 0.02107, 5)])
def test_rate_for_duration(T, expected, digits):
    assert round(lambda_for_duration(T), digits) == expected


def test_rate_inversely_proportional():
    assert lambda_for_duration(180) == pytest.approx(lambda_for_duration(90) / 2, rel=1e-15)


def test_exponential_schedule_endpoints():
    spec = exp_spec()
    start = angle_schedule(spec, 0, 3)
    assert start.angles[1] == math.pi / 2
    end = angle_schedule(spec, spec.total_time, 3)
    deltas = draw_deltas(RAMP_DISORDER, 3)
    assert abs(end.bulk.sum() - deltas.sum()) < 1e-12
    assert theta_tilde(spec, spec.total_time) == pytest.approx(0.01, rel=1e-12)


def test_constant_rate_schedule_endpoint():
    spec = ProtocolSpec("constant_rate", 50, RAMP_DISORDER)
    end = angle_schedule(spec, 50, 2)
    assert np.allclose(end.bulk, draw_deltas(RAMP_DISORDER, 2), atol=1e-15)
    assert angle_schedule(spec, 0, 2).angles[1] == math.pi / 2


@pytest.mark.parametrize("t", [-1, 91])
def test_schedule_range(t):
    with pytest.raises(ValueError):
        angle_schedule(exp_spec(), t)


@pytest.mark.parametrize(
    "disorder",
    [DisorderSpec(18, 0.0, 0.7, seed=0), DisorderSpec(18, 0.2, 0.7, seed=0, pin_first_site=True)],
)
def test_protocol_rejects_bad_disorder(disorder):
    with pytest.raises(ProfileError):
        exp_spec(disorder=disorder)


def test_start_state_is_exact():
    prof = angle_schedule(exp_spec(), 0, 0)
    assert eigenresidual(build_operator(prof), pinned_state(18), 0.0) < 1e-12


@pytest.mark.parametrize("kind", list(ProtocolKind))
def test_trace_invariants(kind):
    tr = evolve_protocol(ProtocolSpec(kind, 60, RAMP_DISORDER), 1)
    assert abs(tr.overlap[0] - 1) < 1e-12
    assert np.all((tr.overlap >= 0) & (tr.overlap <= 1))
    assert math.isnan(tr.gap[0])
    assert np.all(np.isfinite(tr.gap[1:]))
    assert abs(tr.final_state.norm - 1) < 1e-10
    assert tr.t[-1] == 60


def test_batched_run_matches_single_runs():
    spec = exp_spec(70)
    pairs, md = final_states(spec, [4, 9, 11])
    for row, k in enumerate([4, 9, 11]):
        tr = evolve_protocol(spec, k, track_gap=False)
        assert np.array_equal(pairs[row], tr.final_state.pairs)
        assert md[row] == tr.mean_delta


def test_final_overlap_against_direct_overlap():
    spec = exp_spec()
    tr = evolve_protocol(spec, 5, track_gap=False)
    target = build_zero_mode(angle_schedule(spec, spec.total_time, 5))
    assert tr.final_overlap == pytest.approx(abs(np.vdot(target.amplitudes, tr.final_state.amplitudes)) ** 2, abs=1e-14)


def _most_negative_and_positive(n=50):
    _, md = final_states(exp_spec(1), range(n))
    return int(np.argmin(md)), int(np.argmax(md))


def test_exponential_beats_constant_rate():
    neg, _ = _most_negative_and_positive()
    for T in (90, 150, 240):
        e = evolve_protocol(ProtocolSpec("exponential", T, RAMP_DISORDER), neg, track_gap=False).final_overlap
        c = evolve_protocol(ProtocolSpec("constant_rate", T, RAMP_DISORDER), neg, track_gap=False).final_overlap
        assert e > c


def test_negative_mean_has_smaller_late_gap():
    neg, pos = _most_negative_and_positive()
    spec = exp_spec()
    g_neg = evolve_protocol(spec, neg).gap[-1]
    g_pos = evolve_protocol(spec, pos).gap[-1]
    assert g_neg < g_pos


def test_smaller_final_gap_goes_with_lower_fidelity():
    spec = exp_spec()
    traces = [evolve_protocol(spec, k) for k in range(50)]
    pos = [t for t in traces if t.mean_delta > 0]
    neg = [t for t in traces if t.mean_delta < 0]
    agree = [
        (a.gap[-1] < b.gap[-1]) == (a.final_overlap < b.final_overlap) for a in neg for b in pos
    ]
    assert np.mean(agree) >= 0.8
