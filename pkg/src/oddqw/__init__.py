"""Disordered discrete-time quantum walks on finite reflecting chains.

Submodules
----------
disorder
    Coin-angle profiles and box-distributed disorder.
walk
    The one-step walk operator, matrix-free and dense.
transfer
    Transfer matrices, the exact zero mode, growth rates.
counting
    Level counting by vector winding, densities of states, gaps.
special
    Levels at +/-pi/2 and the near-zero edge mode.
adiabatic
    Preparation schedules and fidelity tracking.
ensemble
    Disorder-averaged correlations and power-law fits.
cli
    Command-line entry point.
"""

__version__ = "0.1.0"

from .disorder import AngleProfile, BoundaryKind, DisorderSpec, draw_profile, profile_from_angles  # noqa: E402
from .walk import WalkOperator, WalkState, apply, build_operator, eigenresidual  # noqa: E402
from .transfer import build_zero_mode, closure_check, lyapunov, transfer_at, zero_mode_product  # noqa: E402
from .counting import (  # noqa: E402
    count_states,
    dos_estimate,
    evolve_phase,
    find_quasienergy,
    gap_above_zero,
    integrated_dos,
    sigma_squared,
)
from .special import half_pi_mode_exists, half_pi_product, verify_mode  # noqa: E402
from .adiabatic import ProtocolSpec, angle_schedule, evolve_protocol, lambda_for_duration  # noqa: E402
from .ensemble import compare_sources, correlation_curve, fit_power_law, site_probability  # noqa: E402
