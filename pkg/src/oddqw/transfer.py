"""Transfer matrices along the chain and the exact zero-quasi-energy state.

At quasi-energy ``omega`` the regrouped pair ``(beta_{n-1}, alpha_n)`` is
carried to ``(beta_n, alpha_{n+1})`` by

    T_n = [[exp(i w) sec t_n, -tan t_n],
           [-tan t_n,          exp(-i w) sec t_n]],

a matrix with unit determinant.  The reflecting end coins fix the first and
last pair up to a factor, so ``omega`` belongs to the spectrum exactly when
the propagated first pair lands on the direction of the last one.

At ``omega = 0`` every ``T_n`` shares the eigenvector ``(1, 1)`` with
eigenvalue ``tan(pi/4 - t_n/2)``, which gives the zero mode in closed form.
Products of these factors are kept as running log sums with a separate
sign, because they grow or shrink exponentially with chain length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import wind
from .disorder import HALF_PI, AngleProfile, DisorderSpec, R_MINUS_PLUS, draw_profile
from .errors import ProfileError, SingularCoinError
from .walk import WalkState, pinned_state

__all__ = [
    "TransferMatrix",
    "ZeroModeProduct",
    "transfer_at",
    "left_spinor",
    "right_spinor",
    "regrouped_spinors",
    "propagate",
    "zero_mode_product",
    "build_zero_mode",
    "closure_check",
    "closure_residual",
    "basis_change_matrix",
    "rotated_basis_residual",
    "lyapunov",
    "lyapunov_of_profile",
]


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    omega: float
    theta: float

    @property
    def det(self) -> complex:
        e = self.entries
        return complex(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])


def _check_regular(theta: np.ndarray | float) -> None:
    th = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    bad = np.abs(th) == HALF_PI
    if np.any(bad):
        raise SingularCoinError(
            f"coin angle +/-pi/2 in the bulk at position(s) {np.flatnonzero(bad).tolist()}"
        )


def _matrices(theta: np.ndarray, omega: float) -> np.ndarray:
    sec = 1.0 / np.cos(theta)
    tan = np.tan(theta)
    m = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = np.exp(1j * omega) * sec
    m[..., 0, 1] = -tan
    m[..., 1, 0] = -tan
    m[..., 1, 1] = np.exp(-1j * omega) * sec
    return m


def transfer_at(theta: float, omega: float) -> TransferMatrix:
    """Single-site transfer matrix; rejects ``theta = +/-pi/2``."""
    _check_regular(theta)
    return TransferMatrix(_matrices(np.float64(theta), omega), float(omega), float(theta))


def left_spinor(theta0: float, omega: float) -> np.ndarray:
    """Direction of ``(beta_0, alpha_1)`` forced by the left reflector."""
    return np.array([np.exp(1j * omega), -math.copysign(1.0, theta0)], dtype=np.complex128)


def right_spinor(theta_last: float, omega: float) -> np.ndarray:
    """Direction of ``(beta_N, alpha_{N+1})`` forced by the right reflector."""
    return np.array([math.copysign(1.0, theta_last), np.exp(1j * omega)], dtype=np.complex128)


def regrouped_spinors(state: WalkState) -> np.ndarray:
    """Array of shape ``(N+1, 2)`` holding ``(beta_{n-1}, alpha_n)`` for ``n = 1..N+1``."""
    p = state.pairs
    return np.stack([p[:-1, 1], p[1:, 0]], axis=-1)


def propagate(profile: AngleProfile, omega: float, start: np.ndarray) -> tuple[np.ndarray, float]:
    """Carry ``start`` through ``T_1 .. T_N``.

    Returns the unit-norm result and the accumulated log of its norm.
    """
    _check_regular(profile.bulk)
    mats = _matrices(profile.bulk, omega)
    v = np.asarray(start, dtype=np.complex128).copy()
    lognorm = 0.0
    nv = np.linalg.norm(v)
    v /= nv
    lognorm += math.log(nv)
    for m in mats:
        v = m @ v
        nv = math.hypot(abs(v[0]), abs(v[1]))
        v /= nv
        lognorm += math.log(nv)
    return v, lognorm


def closure_check(profile: AngleProfile, omega: float) -> np.ndarray:
    """Part of the propagated first pair orthogonal to the required last pair.

    Both vectors are normalized, so the result has norm in ``[0, 1]`` and
    vanishes exactly at quasi-energies.
    """
    v, _ = propagate(profile, omega, left_spinor(profile.angles[0], omega))
    r = right_spinor(profile.angles[-1], omega)
    r = r / np.linalg.norm(r)
    return v - np.vdot(r, v) * r


def closure_residual(profile: AngleProfile, omega: float) -> float:
    """Norm of :func:`closure_check`."""
    return float(np.linalg.norm(closure_check(profile, omega)))


@dataclass(frozen=True)
class ZeroModeProduct:
    """Log-domain form of ``lambda_plus = prod tan(pi/4 - theta_n/2)``.

    ``partial_logs[m]`` and ``partial_signs[m]`` describe the product of the
    first ``m`` factors, so entry 0 is the empty product.
    """

    log_lambda_plus: float
    sign: int
    partial_logs: np.ndarray
    partial_signs: np.ndarray

    @property
    def lambda_plus(self) -> float:
        return self.sign * math.exp(self.log_lambda_plus)

    @property
    def lambda_minus(self) -> float:
        return self.sign * math.exp(-self.log_lambda_plus)


def log_product(factors: np.ndarray) -> ZeroModeProduct:
    if np.any(factors == 0.0) or not np.all(np.isfinite(factors)):
        raise SingularCoinError("a product factor is zero or infinite")
    logs = np.concatenate(([0.0], np.cumsum(np.log(np.abs(factors)))))
    signs = np.concatenate(([1.0], np.cumprod(np.sign(factors))))
    return ZeroModeProduct(float(logs[-1]), int(signs[-1]), logs, signs)


def zero_mode_product(profile: AngleProfile) -> ZeroModeProduct:
    """Eigenvalue of ``T_N ... T_1`` at ``omega = 0`` on ``(1, 1)``."""
    _check_regular(profile.bulk)
    return log_product(np.asarray(profile.tan_vartheta))


def build_zero_mode(profile: AngleProfile, seed_side: str = "left") -> WalkState:
    """Normalized zero-quasi-energy eigenstate for ``(-pi/2, +pi/2)`` ends.

    Every regrouped pair is proportional to ``(1, 1)`` with weight
    ``prod_{k<n} tan(pi/4 - theta_k/2)``.  When ``theta_1 = pi/2`` exactly the
    state collapses onto ``beta_0 = alpha_1 = 1/sqrt(2)``.

    Parameters
    ----------
    seed_side : {"left", "right"}
        Which end the weights are referenced to.  Both give the same state.
    """
    if profile.boundary != R_MINUS_PLUS:
        raise ProfileError(
            f"zero-mode construction needs (-pi/2, +pi/2) ends, got {profile.boundary.label()}"
        )
    if profile.angles[1] == HALF_PI:
        return pinned_state(profile.n_bulk)
    prod = zero_mode_product(profile)
    logs = prod.partial_logs
    if seed_side == "right":
        # accumulate from the far end: weight_m = 1 / prod_{k>m} tan(v_k)
        steps = np.log(np.abs(np.asarray(profile.tan_vartheta)))
        logs = -np.concatenate((np.cumsum(steps[::-1])[::-1], [0.0]))
    elif seed_side != "left":
        raise ValueError(f"seed_side must be 'left' or 'right', got {seed_side!r}")
    w = prod.partial_signs * np.exp(logs - logs.max())
    w /= math.sqrt(2.0 * float(np.dot(w, w)))
    pairs = np.zeros((profile.n_bulk + 2, 2), dtype=np.complex128)
    pairs[:-1, 1] = w  # beta_{n-1}
    pairs[1:, 0] = w  # alpha_n
    return WalkState.from_pairs(pairs)


def basis_change_matrix() -> np.ndarray:
    """``P = (sigma_x + sigma_z)/sqrt(2)``, a real symmetric involution."""
    return np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def rotated_basis_residual(profile: AngleProfile, omega: float) -> float:
    """Check the real form of the end-to-end chain.

    Builds ``P (E B_N E ... B_1 E) P`` with ``E = diag(e^{iw}, e^{-iw})`` and
    ``B_n = [[sec, -tan], [-tan, sec]]``.  Conjugation by ``P`` turns ``E``
    into ``[[cos w, i sin w], [i sin w, cos w]]`` and ``B_n`` into
    ``C_n = diag(tan v_n, cot v_n)`` with ``v_n = pi/4 - theta_n/2``; a further
    conjugation by ``Q = diag(1, i)`` makes the rotation real while leaving
    ``C_n`` untouched.  The result is compared with the directly multiplied
    ``R C_N R ... C_1 R``, ``R`` being the real rotation by ``omega``.
    Both products are rescaled by the same running factor; the maximum
    absolute entry difference is returned.
    """
    _check_regular(profile.bulk)
    p = basis_change_matrix()
    e = np.diag([np.exp(1j * omega), np.exp(-1j * omega)])
    c, s = math.cos(omega), math.sin(omega)
    rot = np.array([[c, -s], [s, c]])
    q = np.diag([1.0, 1j])
    th = profile.bulk
    tv = np.asarray(profile.tan_vartheta)
    lhs = e.copy()
    rhs = rot.copy()
    for t, k in zip(th, tv):
        b = np.array([[1.0 / math.cos(t), -math.tan(t)], [-math.tan(t), 1.0 / math.cos(t)]])
        lhs = e @ (b @ lhs)
        rhs = rot @ (np.diag([k, 1.0 / k]) @ rhs)
        scale = np.max(np.abs(rhs))
        lhs /= scale
        rhs /= scale
    return float(np.max(np.abs(q.conj() @ p @ lhs @ p @ q - rhs)))


def lyapunov_of_profile(profile: AngleProfile, omega: float) -> float:
    """Growth rate per bulk site of the transfer product at ``omega``."""
    _check_regular(profile.bulk)
    tv = np.ascontiguousarray(profile.tan_vartheta)
    if np.any(tv == 0.0):
        raise SingularCoinError("bulk coin angle at pi/2")
    *_, lognorm = wind(tv, float(omega), 0)
    return lognorm / profile.n_bulk


def lyapunov(spec: DisorderSpec, omega: float, n_sites: int, realization_index: int = 0) -> float:
    """Inverse localization length from one long chain of ``n_sites`` bulk sites.

    Examples
    --------
    >>> clean = DisorderSpec(n_bulk=1, theta_mean=math.pi / 4)
    >>> lyapunov(clean, 0.1, 2000) > 0
    True
    """
    long_spec = replace(spec, n_bulk=int(n_sites))
    return lyapunov_of_profile(draw_profile(long_spec, R_MINUS_PLUS, realization_index), omega)
