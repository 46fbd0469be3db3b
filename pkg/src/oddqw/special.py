"""Levels pinned at 0, +/-pi/2 and pi by the end coins.

At ``omega = pi/2`` each transfer matrix is ``i sec(t) sigma_z - tan(t) sigma_x``.
Both terms anticommute with ``sigma_y``, so a single matrix swaps the two
``sigma_y`` eigenvectors and a product of two consecutive matrices is
diagonal in that basis.  The end coins select ``sigma_y`` eigenvectors as
well: ``(i, -s_0)`` on the left and ``(s_R, i)`` on the right, with
``s_0, s_R`` the end-coin signs.  Whether a ``pi/2`` level exists therefore
depends only on the parity of ``N`` and on the two end signs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counting import count_states, find_quasienergy
from .disorder import ALL_BOUNDARIES, AngleProfile, BoundaryKind, DisorderSpec, draw_profile
from .errors import ProfileError
from .transfer import ZeroModeProduct, log_product, closure_residual, transfer_at

__all__ = [
    "ModeExistence",
    "EXISTS_TOL",
    "half_pi_mode_exists",
    "half_pi_product",
    "verify_mode",
    "half_pi_table",
    "EdgeMode",
    "near_zero_edge_mode",
]

EXISTS_TOL = 1e-10
SPECIAL_OMEGAS = (0.0, 0.5 * math.pi, -0.5 * math.pi, math.pi)


@dataclass(frozen=True)
class ModeExistence:
    boundary: BoundaryKind
    n_bulk_parity: str
    omega: float
    exists: bool


def half_pi_mode_exists(boundary: BoundaryKind, n_bulk: int) -> bool:
    """Closed-form rule for a level at ``omega = +/-pi/2``.

    Even ``N`` needs equal end signs; odd ``N`` needs opposite ones.
    """
    same = boundary.left == boundary.right
    return same if n_bulk % 2 == 0 else not same


# Columns: sigma_y eigenvectors for eigenvalues +1 and -1.
_SIGMA_Y_BASIS = np.array([[1.0, 1.0], [1j, -1j]]) / math.sqrt(2.0)


def half_pi_product(profile: AngleProfile) -> ZeroModeProduct:
    """Eigenvalue of ``T_N ... T_1`` at ``pi/2`` on the ``sigma_y = +1`` vector.

    The matrices are paired as ``T_{2m} T_{2m-1}``; each pair is conjugated
    into the ``sigma_y`` basis and its diagonal entry is multiplied in the
    log domain.  Partial entries count pairs.

    Raises
    ------
    ValueError
        If ``N`` is odd; one matrix would be left unpaired.
    """
    n = profile.n_bulk
    if n % 2:
        raise ValueError("half_pi_product needs an even number of bulk sites")
    v = _SIGMA_Y_BASIS
    vinv = v.conj().T
    th = profile.bulk
    factors = np.empty(n // 2)
    for m in range(n // 2):
        pair = transfer_at(th[2 * m + 1], 0.5 * math.pi).entries @ transfer_at(th[2 * m], 0.5 * math.pi).entries
        d = vinv @ pair @ v
        scale = max(abs(d[0, 0]), abs(d[1, 1]))
        if abs(d[0, 1]) > 1e-9 * scale or abs(d[1, 0]) > 1e-9 * scale:
            raise ArithmeticError("pair product is not diagonal in the sigma_y basis")
        factors[m] = d[0, 0].real
    return log_product(factors)


def verify_mode(boundary: BoundaryKind, profile: AngleProfile, omega: float) -> float:
    """Closure mismatch at ``omega``; below :data:`EXISTS_TOL` means the level exists."""
    if profile.boundary != boundary:
        raise ProfileError(
            f"profile has ends {profile.boundary.label()}, expected {boundary.label()}"
        )
    return closure_residual(profile, omega)


def half_pi_table(
    n_even: int = 20,
    n_odd: int = 21,
    n_profiles: int = 50,
    delta_max: float = 0.5,
    theta_mean: float = 0.3,
    seed: int = 0,
) -> list[tuple[ModeExistence, bool, float]]:
    """Check the ``pi/2`` rule on random bulk profiles for every end pairing.

    Returns one row per (boundary, parity): the rule's prediction, whether
    every sampled profile agreed with it, and the worst-case margin (largest
    residual where a level is predicted, smallest where none is).
    """
    rows = []
    for b_idx, b in enumerate(ALL_BOUNDARIES):
        for n in (n_even, n_odd):
            predicted = half_pi_mode_exists(b, n)
            spec = DisorderSpec(n, theta_mean, delta_max, seed)
            residuals = np.array(
                [verify_mode(b, draw_profile(spec, b, b_idx * n_profiles + k), 0.5 * math.pi) for k in range(n_profiles)]
            )
            found = residuals < EXISTS_TOL
            agree = bool(np.all(found == predicted))
            margin = float(residuals.max() if predicted else residuals.min())
            parity = "even" if n % 2 == 0 else "odd"
            rows.append((ModeExistence(b, parity, 0.5 * math.pi, predicted), agree, margin))
    return rows


@dataclass(frozen=True)
class EdgeMode:
    omega: float
    residual: float
    next_level: float
    levels_below_half_pi: int


def near_zero_edge_mode(profile: AngleProfile) -> EdgeMode:
    """Smallest positive level for ``(-pi/2, -pi/2)`` ends and its isolation.

    With both ends at ``-pi/2`` there is no exact zero level; instead one
    level sits exponentially close to 0 and is localized at both ends.
    """
    if profile.boundary != BoundaryKind(-1, -1):
        raise ProfileError("edge-mode search needs (-pi/2, -pi/2) ends")
    eps = find_quasienergy(profile, 1)
    nxt = find_quasienergy(profile, 2)
    return EdgeMode(eps, closure_residual(profile, eps), nxt, count_states(profile, 0.0, 0.5 * math.pi))
