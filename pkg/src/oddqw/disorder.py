"""Coin-angle profiles with reflecting ends and box-distributed bulk disorder.

A profile stores the angles ``theta_0 .. theta_{N+1}``.  The two end angles
are total-reflection coins (exactly ``+pi/2`` or ``-pi/2``); the ``N`` bulk
angles are ``theta_mean + delta_n`` with ``delta_n`` uniform on
``[-delta_max, delta_max]``.

Random streams are keyed by ``(seed, realization_index)`` through
:class:`numpy.random.SeedSequence` spawn keys, so any realization can be
regenerated on its own and ensembles can be split across workers freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ProfileError

HALF_PI = 0.5 * math.pi

__all__ = [
    "BoundaryKind",
    "DisorderSpec",
    "AngleProfile",
    "R_MINUS_PLUS",
    "ALL_BOUNDARIES",
    "draw_deltas",
    "draw_profile",
    "profile_from_angles",
    "write_profile_csv",
    "read_profile_csv",
]


@dataclass(frozen=True)
class BoundaryKind:
    """Signs of the two reflecting end coins.

    Parameters
    ----------
    left, right : int
        ``+1`` or ``-1``; the end angle is ``sign * pi/2``.
    """

    left: int = -1
    right: int = 1

    def __post_init__(self) -> None:
        for name, val in (("left", self.left), ("right", self.right)):
            if val not in (-1, 1):
                raise ProfileError(f"boundary {name} sign must be +1 or -1, got {val!r}")

    @property
    def left_angle(self) -> float:
        return self.left * HALF_PI

    @property
    def right_angle(self) -> float:
        return self.right * HALF_PI

    @classmethod
    def from_angles(cls, left: float, right: float) -> "BoundaryKind":
        """Build from end angles, which must equal +/- pi/2 exactly."""
        signs = []
        for ang in (left, right):
            if ang == HALF_PI:
                signs.append(1)
            elif ang == -HALF_PI:
                signs.append(-1)
            else:
                raise ProfileError(f"boundary angle must be exactly +/-pi/2, got {ang!r}")
        return cls(signs[0], signs[1])

    @classmethod
    def parse(cls, text: str) -> "BoundaryKind":
        """Parse ``"-+"``, ``"+-"``, ``"--"`` or ``"++"`` (left sign first)."""
        text = text.strip().replace(",", "")
        if len(text) != 2 or any(c not in "+-" for c in text):
            raise ProfileError(f"boundary must look like '-+', got {text!r}")
        return cls(1 if text[0] == "+" else -1, 1 if text[1] == "+" else -1)

    def label(self) -> str:
        return ("+" if self.left > 0 else "-") + ("+" if self.right > 0 else "-")


R_MINUS_PLUS = BoundaryKind(-1, 1)
ALL_BOUNDARIES = (
    BoundaryKind(1, 1),
    BoundaryKind(-1, 1),
    BoundaryKind(1, -1),
    BoundaryKind(-1, -1),
)


@dataclass(frozen=True)
class DisorderSpec:
    """Ensemble description for a disordered chain.

    Parameters
    ----------
    n_bulk : int
        Number of bulk sites ``N`` (sites ``1..N``).
    theta_mean : float
        Mean coin angle.
    delta_max : float
        Half-width of the uniform box for the fluctuations.
    seed : int
        Base seed, an unsigned 64-bit integer.
    pin_first_site : bool
        Force ``delta_1 = 0``; used by the preparation protocols.
    """

    n_bulk: int
    theta_mean: float = 0.0
    delta_max: float = 0.0
    seed: int = 0
    pin_first_site: bool = False

    def __post_init__(self) -> None:
        if int(self.n_bulk) != self.n_bulk or self.n_bulk < 1:
            raise ProfileError(f"n_bulk must be a positive integer, got {self.n_bulk!r}")
        if not math.isfinite(self.theta_mean):
            raise ProfileError("theta_mean must be finite")
        if not (math.isfinite(self.delta_max) and self.delta_max >= 0.0):
            raise ProfileError(f"delta_max must be finite and >= 0, got {self.delta_max!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ProfileError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def keeps_sec_finite(self) -> bool:
        """True when every bulk angle stays strictly inside (-pi/2, pi/2)."""
        return abs(self.theta_mean) + self.delta_max < HALF_PI

    def require_delocalized_regime(self) -> None:
        """Raise unless ``|theta_mean| + delta_max < pi/2``."""
        if not self.keeps_sec_finite:
            raise ProfileError(
                "|theta_mean| + delta_max must stay below pi/2 "
                f"(got {abs(self.theta_mean) + self.delta_max:.6g})"
            )


@dataclass(frozen=True)
class AngleProfile:
    """Coin angles for one chain.

    Attributes
    ----------
    angles : ndarray, shape (N+2,)
        ``theta_0 .. theta_{N+1}``; read-only.
    mean_delta : float
        Arithmetic mean of the bulk fluctuations ``delta_1 .. delta_N``.
    """

    angles: np.ndarray
    mean_delta: float = 0.0
    boundary: BoundaryKind = field(init=False)
    tan_vartheta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ang = np.array(self.angles, dtype=np.float64)
        if ang.ndim != 1 or ang.size < 3:
            raise ProfileError("a profile needs at least one bulk site plus two ends")
        if not np.all(np.isfinite(ang)):
            raise ProfileError("profile angles must be finite")
        ang.setflags(write=False)
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "boundary", BoundaryKind.from_angles(ang[0], ang[-1]))
        # tan(pi/4 - theta/2) for the bulk, computed once and shared by all modules.
        tv = np.tan(0.25 * np.pi - 0.5 * ang[1:-1])
        tv.setflags(write=False)
        object.__setattr__(self, "tan_vartheta", tv)

    @property
    def n_bulk(self) -> int:
        return self.angles.size - 2

    @property
    def bulk(self) -> np.ndarray:
        return self.angles[1:-1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AngleProfile):
            return NotImplemented
        return np.array_equal(self.angles, other.angles) and self.mean_delta == other.mean_delta

    def __hash__(self) -> int:
        return hash((self.angles.tobytes(), self.mean_delta))


def _generator(seed: int, realization_index: int) -> np.random.Generator:
    if int(realization_index) != realization_index or realization_index < 0:
        raise ProfileError(f"realization_index must be a nonnegative integer, got {realization_index!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(realization_index),))
    return np.random.default_rng(ss)


def draw_deltas(spec: DisorderSpec, realization_index: int) -> np.ndarray:
    """Bulk fluctuations ``delta_1 .. delta_N`` for one realization.

    With ``pin_first_site`` the first entry is replaced by zero after the
    draw, so sites ``2..N`` coincide with the unpinned realization.
    """
    rng = _generator(spec.seed, realization_index)
    d = spec.delta_max
    deltas = rng.uniform(-d, d, size=spec.n_bulk) if d > 0 else np.zeros(spec.n_bulk)
    if spec.pin_first_site:
        deltas[0] = 0.0
    return deltas


def draw_profile(
    spec: DisorderSpec,
    boundary: BoundaryKind = R_MINUS_PLUS,
    realization_index: int = 0,
) -> AngleProfile:
    """Draw the angle profile for realization ``realization_index``.

    Examples
    --------
    >>> p = draw_profile(DisorderSpec(n_bulk=5, theta_mean=0.3))
    >>> p.angles[1:-1].tolist() == [0.3] * 5
    True
    """
    if not isinstance(boundary, BoundaryKind):
        raise ProfileError(f"boundary must be a BoundaryKind, got {type(boundary).__name__}")
    deltas = draw_deltas(spec, realization_index)
    angles = np.empty(spec.n_bulk + 2)
    angles[0] = boundary.left_angle
    angles[-1] = boundary.right_angle
    angles[1:-1] = spec.theta_mean + deltas
    return AngleProfile(angles, float(np.mean(deltas)))


def profile_from_angles(
    bulk: Sequence[float] | np.ndarray,
    boundary: BoundaryKind = R_MINUS_PLUS,
    theta_mean: float | None = None,
) -> AngleProfile:
    """Wrap explicit bulk angles in a profile.

    ``mean_delta`` is measured from ``theta_mean`` when given, otherwise it is 0.
    """
    bulk = np.asarray(bulk, dtype=np.float64).ravel()
    if bulk.size == 0:
        raise ProfileError("need at least one bulk angle")
    angles = np.concatenate(([boundary.left_angle], bulk, [boundary.right_angle]))
    md = 0.0 if theta_mean is None else float(np.mean(bulk - theta_mean))
    return AngleProfile(angles, md)


def write_profile_csv(profile: AngleProfile, path: str | Path) -> None:
    """Write ``site,theta`` rows with full float precision."""
    sites = np.arange(profile.angles.size)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("site,theta\n")
        for s, th in zip(sites, profile.angles):
            fh.write(f"{s},{float(th)!r}\n")


def read_profile_csv(path: str | Path, mean_delta: float = 0.0) -> AngleProfile:
    """Inverse of :func:`write_profile_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    order = np.argsort(data[:, 0])
    return AngleProfile(data[order, 1], mean_delta)


def iter_profiles(
    spec: DisorderSpec, indices: Iterable[int], boundary: BoundaryKind = R_MINUS_PLUS
):
    """Yield profiles for the given realization indices in order."""
    for k in indices:
        yield draw_profile(spec, boundary, k)
