"""Quasi-energy counting by winding of a real 2-vector.

After a change of basis the end-to-end condition reads
``(1, 0) ~ R C_N R ... C_1 R (1, 0)`` with ``R`` a rotation by ``omega`` and
``C_n = diag(tan v_n, cot v_n)``.  The angle of the evolved vector grows
monotonically with ``omega``, so the number of quasi-energies below
``omega`` is the number of half turns the vector has made.  Counting is
therefore exact integer arithmetic on the quadrant index tracked by the
compiled kernel, and bisection on that index locates individual levels.

Other end-coin signs only move the start axis (``+pi/2`` on the left starts
on the y axis) and the target axis (``-pi/2`` on the right ends on the
y axis).  Negative ``tan v_n`` (coin angles beyond ``pi/2``) act as an
extra half turn that does not depend on ``omega``; it is tracked separately
so it cancels from all counts.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._kernels import wind, wind_steps
from .disorder import HALF_PI, AngleProfile, BoundaryKind, DisorderSpec, R_MINUS_PLUS, draw_profile
from .errors import CountingRangeError, ResolutionWarning, SingularCoinError
from .fitting import line_fit

__all__ = [
    "WindingTrace",
    "CountResult",
    "DosFit",
    "evolve_phase",
    "phase_history",
    "state_count",
    "count_states",
    "integrated_dos",
    "dos_curve",
    "dos_grid",
    "fit_integrated_dos",
    "fit_dos_arrays",
    "dos_estimate",
    "find_quasienergy",
    "all_quasienergies",
    "gap_above_zero",
    "sigma_squared",
    "integrated_dos_closed_form",
    "dyson_density",
]

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200


def _tan_vartheta(profile: AngleProfile) -> np.ndarray:
    tv = np.ascontiguousarray(profile.tan_vartheta)
    if np.any(np.abs(profile.bulk) == HALF_PI) or np.any(tv == 0.0) or not np.all(np.isfinite(tv)):
        raise SingularCoinError("bulk coin angle at +/-pi/2; the stretch factor is 0 or infinite")
    return tv


def _start_quadrant(b: BoundaryKind) -> int:
    return 0 if b.left < 0 else 1


def _target_offset(b: BoundaryKind) -> int:
    return 0 if b.right > 0 else 1


@dataclass(frozen=True)
class WindingTrace:
    """Outcome of the winding evolution at one ``omega``.

    Attributes
    ----------
    phi : float
        Unwrapped angle before the trailing rotation, with the fixed half
        turns from negative stretch factors removed.
    log_norm : float
        Log of the vector's norm growth.
    quadrant_crossings : int
        Net axis crossings made during rotation sub-steps.
    step : int
        Number of rotations applied (``N + 1``).
    quadrant, local_angle : int, float
        Exact final direction, ``quadrant * pi/2 + local_angle``.
    flips : int
        Number of negative stretch factors.
    """

    phi: float
    log_norm: float
    quadrant_crossings: int
    step: int
    quadrant: int
    local_angle: float
    flips: int


def evolve_phase(profile: AngleProfile, omega: float) -> WindingTrace:
    """Run the winding evolution for ``profile`` at ``omega``."""
    tv = _tan_vartheta(profile)
    q0 = _start_quadrant(profile.boundary)
    q, a, flips, crossings, lognorm = wind(tv, float(omega), q0)
    phi = (q - 2 * flips) * HALF_PI + a - omega
    return WindingTrace(phi, lognorm, int(crossings), tv.size + 1, int(q), float(a), int(flips))


def phase_history(profile: AngleProfile, omega: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-step unwrapped angle, cumulative crossings and log norm.

    The angle excludes fixed half turns, as in :attr:`WindingTrace.phi`, but
    includes each step's rotation.
    """
    tv = _tan_vartheta(profile)
    qs, angs, flips, crossings, lns = wind_steps(tv, float(omega), _start_quadrant(profile.boundary))
    return (qs - 2 * flips) * HALF_PI + angs, crossings, lns


def state_count(profile: AngleProfile, omega: float) -> int:
    """Integer staircase ``F(omega)``; ``F(b) - F(a)`` counts levels in ``(a, b]``."""
    tv = _tan_vartheta(profile)
    q, *_ = wind(tv, float(omega), _start_quadrant(profile.boundary))
    return (int(q) - _target_offset(profile.boundary)) // 2


def count_states(profile: AngleProfile, lo: float, hi: float) -> int:
    """Number of quasi-energies in ``(lo, hi]`` for ``-pi <= lo <= hi <= pi``."""
    if hi < lo:
        raise ValueError("need lo <= hi")
    return state_count(profile, hi) - state_count(profile, lo)


@dataclass(frozen=True)
class CountResult:
    """Levels between 0 and ``omega``.

    ``N_I = 1/2 + j/(N+1)``: the count is taken per regrouped pair, which
    puts ``N_I(0) = 1/2`` by particle-hole symmetry.
    """

    omega: float
    j: int
    N_I: float
    phi: float


def integrated_dos(profile: AngleProfile, omega: float) -> CountResult:
    """Integrated density of states at ``omega`` in ``(0, pi)``."""
    if not 0.0 < omega < math.pi:
        raise ValueError(f"omega must lie in (0, pi), got {omega!r}")
    tr = evolve_phase(profile, omega)
    j = (tr.quadrant - _target_offset(profile.boundary)) // 2 - state_count(profile, 0.0)
    return CountResult(float(omega), int(j), 0.5 + j / (profile.n_bulk + 1), tr.phi)


def dos_grid(x_lo: float = 0.25, x_hi: float = 2.5, n_points: int = 46) -> np.ndarray:
    """Quasi-energies evenly spaced in ``x = ln|ln tan(omega)|``."""
    x = np.linspace(x_lo, x_hi, n_points)
    return np.arctan(np.exp(-np.exp(x)))


def dos_curve(profile: AngleProfile, omegas: np.ndarray) -> list[CountResult]:
    return [integrated_dos(profile, float(w)) for w in np.asarray(omegas)]


@dataclass(frozen=True)
class DosFit:
    """Line fit of ``ln(N_I - 1/2)`` against ``ln|ln tan omega|``."""

    slope: float
    intercept: float
    window_lo: float
    window_hi: float
    r2: float
    n_points: int


def fit_integrated_dos(results: list[CountResult], window: tuple[float, float] = (1.0, 2.0)) -> DosFit:
    """Fit the small-``omega`` law over ``window`` in ``ln|ln tan omega|``."""
    om = np.array([r.omega for r in results])
    ni = np.array([r.N_I for r in results])
    return fit_dos_arrays(om, ni, window)


def fit_dos_arrays(om: np.ndarray, ni: np.ndarray, window: tuple[float, float] = (1.0, 2.0)) -> DosFit:
    """Same as :func:`fit_integrated_dos` for plain arrays (e.g. ensemble means)."""
    om = np.asarray(om, dtype=np.float64)
    ni = np.asarray(ni, dtype=np.float64)
    x = np.log(np.abs(np.log(np.tan(om))))
    keep = (x >= window[0]) & (x <= window[1]) & (ni > 0.5)
    fit = line_fit(x[keep], np.log(ni[keep] - 0.5))
    return DosFit(fit.slope, fit.intercept, float(window[0]), float(window[1]), fit.r_squared, fit.n_points)


def sigma_squared(theta_mean: float, delta_max: float) -> float:
    """``2 <(ln tan^2 v)^2>`` for ``theta`` uniform on ``theta_mean +/- delta_max``.

    Evaluated by adaptive quadrature.
    """

    def g(theta: float) -> float:
        return 2.0 * (2.0 * math.log(math.tan(0.25 * math.pi - 0.5 * theta))) ** 2

    if delta_max == 0.0:
        return g(theta_mean)
    val, _ = integrate.quad(g, theta_mean - delta_max, theta_mean + delta_max, limit=200)
    return val / (2.0 * delta_max)


def integrated_dos_closed_form(omega: np.ndarray | float, sigma2: float) -> np.ndarray:
    """Small-``omega`` law ``(1 + sigma2 / (4 ln^2 tan omega)) / 2``."""
    return 0.5 * (1.0 + sigma2 / (4.0 * np.log(np.tan(omega)) ** 2))


def dyson_density(omega: np.ndarray | float, sigma2: float) -> np.ndarray:
    """Leading small-``omega`` density ``-(sigma2/4) / (omega ln^3 omega)``."""
    omega = np.asarray(omega, dtype=np.float64)
    return -(sigma2 / 4.0) / (omega * np.log(omega) ** 3)


def _map_ordered(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def dos_estimate(
    spec: DisorderSpec,
    omegas: np.ndarray,
    n_realizations: int = 1,
    log_step: float = 0.25,
    min_states: int = 20,
    threads: int = 1,
) -> np.ndarray:
    """Density of states by a centred difference of the level count.

    At each ``omega`` the count over ``(omega e^{-h}, omega e^{h}]`` with
    ``h = log_step`` is averaged over realizations and divided by
    ``(N+1)`` times the interval width.

    Warns
    -----
    ResolutionWarning
        When some interval holds fewer than ``min_states`` levels summed
        over all realizations.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
    if np.any(omegas <= 0) or np.any(omegas * math.exp(log_step) >= math.pi):
        raise ValueError("omegas must lie in (0, pi e^{-h})")
    up = omegas * math.exp(log_step)
    dn = omegas * math.exp(-log_step)

    def one(k: int) -> np.ndarray:
        prof = draw_profile(spec, R_MINUS_PLUS, k)
        return np.array([count_states(prof, a, b) for a, b in zip(dn, up)], dtype=np.int64)

    counts = np.sum(_map_ordered(one, range(n_realizations), threads), axis=0)
    if np.any(counts < min_states):
        warnings.warn(
            f"only {int(counts.min())} levels fell in the narrowest interval; "
            "widen log_step or add realizations",
            ResolutionWarning,
            stacklevel=2,
        )
    return counts / n_realizations / (spec.n_bulk + 1) / (up - dn)


def _bisect_level(profile: AngleProfile, q_target: int, lo: float, hi: float, tol: float, max_iter: int) -> float:
    tv = _tan_vartheta(profile)
    q0 = _start_quadrant(profile.boundary)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        q, *_ = wind(tv, mid, q0)
        if q >= q_target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _level_above(profile: AngleProfile, k: int, lo: float, tol: float, max_iter: int) -> float:
    base = state_count(profile, lo)
    total = state_count(profile, math.pi) - base
    if not 1 <= k <= total:
        raise CountingRangeError(f"k={k} outside 1..{total}")
    q_target = 2 * (base + k) + _target_offset(profile.boundary)
    return _bisect_level(profile, q_target, lo, math.pi, tol, max_iter)


def find_quasienergy(
    profile: AngleProfile, k: int, tol: float = BISECTION_TOL, max_iter: int = BISECTION_MAX_ITER
) -> float:
    """The ``k``-th quasi-energy in ``(0, pi]``, counting upward from 0."""
    return _level_above(profile, int(k), 0.0, tol, max_iter)


def all_quasienergies(profile: AngleProfile, tol: float = BISECTION_TOL) -> np.ndarray:
    """Every quasi-energy in ``(-pi, pi]``, ascending.

    Costs one bisection per level; meant for short chains.
    """
    base = state_count(profile, -math.pi)
    total = state_count(profile, math.pi) - base
    return np.array([_level_above(profile, k, -math.pi, tol, BISECTION_MAX_ITER) for k in range(1, total + 1)])


def gap_above_zero(profile: AngleProfile) -> float:
    """Smallest positive quasi-energy for ``(-pi/2, +pi/2)`` ends."""
    if profile.boundary != R_MINUS_PLUS:
        raise ValueError("the gap above the zero mode needs (-pi/2, +pi/2) ends")
    return find_quasienergy(profile, 1)
