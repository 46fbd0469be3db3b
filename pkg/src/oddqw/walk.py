"""One-step walk operator on a finite reflecting chain.

Amplitudes are stored per site as ``(alpha_n, beta_n)``.  One step rotates
each site's pair by its coin angle and then moves ``alpha`` one site right
and ``beta`` one site left::

    alpha'_{n+1} = cos(t_n) alpha_n - sin(t_n) beta_n
    beta'_{n-1}  = sin(t_n) alpha_n + cos(t_n) beta_n

With reflecting end coins nothing ever lands on ``alpha_0`` or
``beta_{N+1}``; those two slots are kept in the array but stay zero.
The production path is matrix-free.  The dense matrix is built only on
request and serves as a reference for small chains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .disorder import HALF_PI, AngleProfile
from .errors import DimensionError

__all__ = [
    "WalkState",
    "WalkOperator",
    "build_operator",
    "apply",
    "eigenresidual",
    "coin_cos_sin",
    "step_pairs",
    "pinned_state",
    "live_mask",
    "write_state_csv",
    "read_state_csv",
]


@dataclass(frozen=True)
class WalkState:
    """Amplitude vector ``(alpha_0, beta_0, ..., alpha_{N+1}, beta_{N+1})``."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if amp.size < 6 or amp.size % 2:
            raise DimensionError(f"state length must be 2(N+2) with N >= 1, got {amp.size}")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_pairs(cls, pairs: np.ndarray) -> "WalkState":
        """Build from an ``(N+2, 2)`` array of ``(alpha, beta)`` rows."""
        return cls(np.asarray(pairs).reshape(-1))

    @property
    def pairs(self) -> np.ndarray:
        return self.amplitudes.reshape(-1, 2)

    @property
    def n_bulk(self) -> int:
        return self.amplitudes.size // 2 - 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "WalkState":
        return WalkState(self.amplitudes / self.norm)


def coin_cos_sin(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cosines and sines of the coin angles, exact at ``+/-pi/2``.

    ``np.cos(pi/2)`` is about ``6e-17``; snapping it to zero keeps the
    reflecting coins exact.  Works on any leading batch shape.
    """
    angles = np.asarray(angles, dtype=np.float64)
    c = np.cos(angles)
    s = np.sin(angles)
    at_pole = np.abs(angles) == HALF_PI
    c = np.where(at_pole, 0.0, c)
    s = np.where(at_pole, np.sign(angles), s)
    return c, s


def step_pairs(c: np.ndarray, s: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Apply one walk step to amplitude pairs of shape ``(..., N+2, 2)``."""
    a = pairs[..., 0]
    b = pairs[..., 1]
    out = np.zeros_like(pairs)
    out[..., 1:, 0] = (c * a - s * b)[..., :-1]
    out[..., :-1, 1] = (s * a + c * b)[..., 1:]
    return out


def live_mask(n_bulk: int) -> np.ndarray:
    """Boolean mask over the flat amplitude vector, False at ``alpha_0`` and ``beta_{N+1}``."""
    m = np.ones(2 * (n_bulk + 2), dtype=bool)
    m[0] = False
    m[-1] = False
    return m


@dataclass(frozen=True)
class WalkOperator:
    """Immutable one-step operator for a given profile."""

    profile: AngleProfile
    cos: np.ndarray = field(init=False, repr=False)
    sin: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        c, s = coin_cos_sin(self.profile.angles)
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @property
    def dim(self) -> int:
        return 2 * (self.profile.n_bulk + 2)

    def matrix(self) -> np.ndarray:
        """Dense ``2(N+2) x 2(N+2)`` matrix, intended for small chains."""
        d = self.dim
        n_sites = d // 2
        u = np.zeros((d, d), dtype=np.complex128)
        c, s = self.cos, self.sin
        for n in range(n_sites):
            if n + 1 < n_sites:
                u[2 * (n + 1), 2 * n] = c[n]
                u[2 * (n + 1), 2 * n + 1] = -s[n]
            if n - 1 >= 0:
                u[2 * (n - 1) + 1, 2 * n] = s[n]
                u[2 * (n - 1) + 1, 2 * n + 1] = c[n]
        return u

    def reduced_matrix(self) -> np.ndarray:
        """Dense matrix restricted to the ``2(N+1)`` live amplitudes."""
        m = live_mask(self.profile.n_bulk)
        return self.matrix()[np.ix_(m, m)]

    def unitarity_defect(self) -> float:
        """``max |U^dagger U - I|`` on the live block."""
        u = self.reduced_matrix()
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def build_operator(profile: AngleProfile) -> WalkOperator:
    """Walk operator for ``profile``."""
    return WalkOperator(profile)


def apply(op: WalkOperator, state: WalkState) -> WalkState:
    """Return ``U @ state`` without forming ``U``."""
    if state.amplitudes.size != op.dim:
        raise DimensionError(f"state has {state.amplitudes.size} amplitudes, operator needs {op.dim}")
    return WalkState.from_pairs(step_pairs(op.cos, op.sin, state.pairs))


def eigenresidual(op: WalkOperator, state: WalkState, omega: float) -> float:
    """Euclidean norm of ``U psi - exp(i omega) psi``."""
    out = apply(op, state)
    return float(np.linalg.norm(out.amplitudes - np.exp(1j * omega) * state.amplitudes))


def pinned_state(n_bulk: int) -> WalkState:
    """The state ``beta_0 = alpha_1 = 1/sqrt(2)``, zero elsewhere.

    It is an exact zero-quasi-energy eigenstate whenever ``theta_0 = -pi/2``
    and ``theta_1 = pi/2``.
    """
    pairs = np.zeros((n_bulk + 2, 2), dtype=np.complex128)
    pairs[0, 1] = pairs[1, 0] = np.sqrt(0.5)
    return WalkState.from_pairs(pairs)


def write_state_csv(state: WalkState, path: str | Path) -> None:
    """Write ``site,re_alpha,im_alpha,re_beta,im_beta`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("site,re_alpha,im_alpha,re_beta,im_beta\n")
        for n, (a, b) in enumerate(state.pairs):
            fh.write(f"{n},{float(a.real)!r},{float(a.imag)!r},{float(b.real)!r},{float(b.imag)!r}\n")


def read_state_csv(path: str | Path) -> WalkState:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    data = data[np.argsort(data[:, 0])]
    pairs = np.empty((data.shape[0], 2), dtype=np.complex128)
    pairs[:, 0] = data[:, 1] + 1j * data[:, 2]
    pairs[:, 1] = data[:, 3] + 1j * data[:, 4]
    return WalkState.from_pairs(pairs)
