"""Slow ramps of the mean coin angle that carry an edge state into the bulk zero mode.

The walk starts in ``beta_0 = alpha_1 = 1/sqrt(2)``, which is exactly the
zero mode while ``theta_1 = pi/2``.  The mean angle is then lowered from
``pi/2`` towards 0 one walk step at a time, either linearly or
exponentially, while the bulk fluctuations ``delta_n`` stay frozen.  At
each step the evolved state is compared with the instantaneous zero mode
built from transfer matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .counting import gap_above_zero
from .disorder import HALF_PI, AngleProfile, DisorderSpec, draw_deltas
from .errors import OddqwError, ProfileError
from .transfer import build_zero_mode
from .walk import WalkState, build_operator, apply, coin_cos_sin, pinned_state, step_pairs

__all__ = [
    "ProtocolKind",
    "ProtocolSpec",
    "FidelityTrace",
    "lambda_for_duration",
    "theta_tilde",
    "angle_schedule",
    "evolve_protocol",
    "final_states",
]

FINAL_FRACTION = 0.01


class ProtocolKind(str, Enum):
    CONSTANT_RATE = "constant_rate"
    EXPONENTIAL = "exponential"


def lambda_for_duration(T: int) -> float:
    """Rate that brings ``pi/2`` down to ``0.01`` in ``T`` steps."""
    if T < 1:
        raise ValueError("T must be at least 1")
    return -math.log(FINAL_FRACTION / HALF_PI) / T


@dataclass(frozen=True)
class ProtocolSpec:
    """Preparation schedule.

    Parameters
    ----------
    kind : ProtocolKind or str
    total_time : int
        Number of walk steps ``T``.
    disorder : DisorderSpec
        Must have ``pin_first_site=True`` and ``theta_mean = 0``.
    lam : float, optional
        Exponential rate; defaults to :func:`lambda_for_duration` of ``T``.
    theta_start : float
        Initial mean angle, ``pi/2``.
    """

    kind: ProtocolKind
    total_time: int
    disorder: DisorderSpec
    lam: float | None = None
    theta_start: float = HALF_PI

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        if int(self.total_time) != self.total_time or self.total_time < 1:
            raise ProfileError(f"total_time must be a positive integer, got {self.total_time!r}")
        if not self.disorder.pin_first_site:
            raise ProfileError("the protocols need a disorder spec with pin_first_site=True")
        if self.disorder.theta_mean != 0.0:
            raise ProfileError("the protocol sets the mean angle itself; use theta_mean=0")
        if self.kind is ProtocolKind.EXPONENTIAL:
            if self.disorder.n_bulk < 2:
                raise ProfileError("the exponential schedule needs at least two bulk sites")
            if self.lam is None:
                object.__setattr__(self, "lam", lambda_for_duration(self.total_time))
            if not self.lam > 0:
                raise ProfileError("lam must be positive")

    @property
    def rate(self) -> float:
        """Linear ramp rate ``theta_start / T``."""
        return self.theta_start / self.total_time


def theta_tilde(spec: ProtocolSpec, t: int | np.ndarray) -> np.ndarray | float:
    """Mean angle at step ``t``."""
    if spec.kind is ProtocolKind.EXPONENTIAL:
        return spec.theta_start * np.exp(-spec.lam * np.asarray(t, dtype=np.float64))
    return spec.theta_start - spec.rate * np.asarray(t, dtype=np.float64)


def _check_step(spec: ProtocolSpec, t: int) -> None:
    if not 0 <= t <= spec.total_time:
        raise ValueError(f"t={t} outside 0..{spec.total_time}")


def _angles(spec: ProtocolSpec, t: int, deltas: np.ndarray) -> np.ndarray:
    """Full angle arrays for one step; ``deltas`` has shape ``(..., N)``."""
    n = deltas.shape[-1]
    tt = float(theta_tilde(spec, t))
    bulk = tt + deltas
    if spec.kind is ProtocolKind.EXPONENTIAL:
        # theta_1 follows the mean exactly; the rest carry a constant offset
        # that makes the final bulk angles sum to sum(delta).
        shift = n / (n - 1) * float(theta_tilde(spec, spec.total_time))
        bulk = bulk.copy()
        bulk[..., 1:] -= shift
        bulk[..., 0] = tt
    out = np.empty(deltas.shape[:-1] + (n + 2,))
    out[..., 0] = -HALF_PI
    out[..., -1] = HALF_PI
    out[..., 1:-1] = bulk
    return out


def angle_schedule(spec: ProtocolSpec, t: int, realization_index: int = 0) -> AngleProfile:
    """Angle profile at step ``t`` for one realization."""
    _check_step(spec, t)
    deltas = draw_deltas(spec.disorder, realization_index)
    return AngleProfile(_angles(spec, t, deltas), float(np.mean(deltas)))


@dataclass(frozen=True)
class FidelityTrace:
    """Per-step record of one preparation run.

    ``gap`` is NaN at steps where the zero mode sits on a singular coin
    (``theta_1 = pi/2`` at ``t = 0``).
    """

    t: np.ndarray
    overlap: np.ndarray
    gap: np.ndarray
    theta_tilde: np.ndarray
    mean_delta: float
    realization_index: int
    final_state: WalkState = field(repr=False)

    @property
    def final_overlap(self) -> float:
        return float(self.overlap[-1])


def _safe_gap(profile: AngleProfile) -> float:
    try:
        return gap_above_zero(profile)
    except OddqwError:
        return math.nan


def evolve_protocol(spec: ProtocolSpec, realization_index: int = 0, track_gap: bool = True) -> FidelityTrace:
    """Evolve one realization through the whole schedule.

    The state is advanced as ``psi(t) = U(t) psi(t-1)`` starting from
    ``U(0) psi(0)``, which equals ``psi(0)``.
    """
    deltas = draw_deltas(spec.disorder, realization_index)
    mean_delta = float(np.mean(deltas))
    steps = np.arange(spec.total_time + 1)
    overlap = np.empty(steps.size)
    gap = np.full(steps.size, math.nan)
    psi = pinned_state(spec.disorder.n_bulk)
    for t in steps:
        prof = AngleProfile(_angles(spec, int(t), deltas), mean_delta)
        psi = apply(build_operator(prof), psi)
        target = build_zero_mode(prof)
        overlap[t] = min(1.0, abs(np.vdot(target.amplitudes, psi.amplitudes)) ** 2)
        if track_gap and prof.angles[1] != HALF_PI:
            gap[t] = _safe_gap(prof)
    return FidelityTrace(
        steps, overlap, gap, np.asarray(theta_tilde(spec, steps)), mean_delta, int(realization_index), psi
    )


def final_states(spec: ProtocolSpec, realization_indices) -> tuple[np.ndarray, np.ndarray]:
    """Final states for many realizations at once.

    Returns
    -------
    pairs : ndarray, shape (R, N+2, 2)
        Amplitudes ``(alpha_n, beta_n)`` after ``T`` steps.
    mean_deltas : ndarray, shape (R,)
    """
    idx = list(realization_indices)
    deltas = np.array([draw_deltas(spec.disorder, k) for k in idx]).reshape(len(idx), spec.disorder.n_bulk)
    psi = np.broadcast_to(pinned_state(spec.disorder.n_bulk).pairs, (len(idx), spec.disorder.n_bulk + 2, 2)).copy()
    for t in range(spec.total_time + 1):
        c, s = coin_cos_sin(_angles(spec, t, deltas))
        psi = step_pairs(c, s, psi)
    return psi, deltas.mean(axis=1)
