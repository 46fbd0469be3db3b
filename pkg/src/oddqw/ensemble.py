"""Disorder-averaged two-point correlations of zero modes and power-law fits.

For each realization the zero mode (exact, or the end state of a
preparation run) gives site probabilities ``p(n)``; the correlation with
the reference site is ``p(n) p(ref)``.  Averages run over realizations with
identical separations.

Parallel runs split the realization range into contiguous chunks whose
per-realization rows are concatenated in index order before any reduction,
so results do not depend on the number of threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .adiabatic import ProtocolSpec, angle_schedule, final_states
from .disorder import DisorderSpec, R_MINUS_PLUS, draw_profile
from .errors import FitWindowError
from .fitting import MIN_FIT_POINTS, line_fit
from .transfer import build_zero_mode
from .walk import WalkState

__all__ = [
    "PER_SITE",
    "PER_REGROUPED",
    "CorrelationCurve",
    "PowerLawFit",
    "SourceComparison",
    "site_probability",
    "site_probabilities",
    "correlation_curve",
    "default_window",
    "fit_power_law",
    "compare_sources",
]

PER_SITE = "per_site"
PER_REGROUPED = "per_regrouped_spinor"
_CONVENTIONS = (PER_SITE, PER_REGROUPED)
N_BOOTSTRAP = 200

Source = Union[str, ProtocolSpec]


def _check_convention(convention: str) -> None:
    if convention not in _CONVENTIONS:
        raise ValueError(f"convention must be one of {_CONVENTIONS}, got {convention!r}")


def site_probabilities(pairs: np.ndarray, convention: str = PER_SITE) -> np.ndarray:
    """Site probabilities for amplitude pairs of shape ``(..., N+2, 2)``.

    Entry ``n`` of the last axis refers to site ``n``.  In the regrouped
    convention site ``n`` holds ``|beta_{n-1}|^2 + |alpha_n|^2`` and site 0
    is empty.
    """
    _check_convention(convention)
    w = np.abs(pairs) ** 2
    if convention == PER_SITE:
        return w.sum(axis=-1)
    out = np.zeros(w.shape[:-1])
    out[..., 1:] = w[..., :-1, 1] + w[..., 1:, 0]
    return out


def site_probability(state: WalkState, n: int, convention: str = PER_SITE) -> float:
    """Probability on site ``n`` of a normalized state."""
    n_sites = state.n_bulk + 2
    lo = 0 if convention == PER_SITE else 1
    if not lo <= n < n_sites:
        raise IndexError(f"site {n} outside {lo}..{n_sites - 1}")
    return float(site_probabilities(state.pairs, convention)[n])


@dataclass(frozen=True)
class CorrelationCurve:
    """Realization-averaged ``<p(ref + s) p(ref)>`` against separation ``s``.

    ``samples`` keeps the per-realization rows for resampling; it is left out
    of equality checks.
    """

    separations: np.ndarray
    mean_corr: np.ndarray
    stderr: np.ndarray
    realization_count: int
    site_probability_convention: str
    reference_site: int = 1
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)


def _exact_rows(spec: DisorderSpec, indices: range, convention: str) -> np.ndarray:
    rows = [site_probabilities(build_zero_mode(draw_profile(spec, R_MINUS_PLUS, k)).pairs, convention) for k in indices]
    return np.array(rows)


def _adiabatic_rows(protocol: ProtocolSpec, indices: range, convention: str) -> np.ndarray:
    pairs, _ = final_states(protocol, indices)
    return site_probabilities(pairs, convention)


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:])]


def _rows(fn, arg, n_realizations: int, convention: str, threads: int) -> np.ndarray:
    # Chunk size does not affect any row, and rows are stacked in index order.
    chunks = _chunks(n_realizations, 4 * threads if threads > 1 else 1)
    if threads <= 1:
        parts = [fn(arg, c, convention) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: fn(arg, c, convention), chunks))
    return np.concatenate(parts, axis=0)


def _curve_from_probs(probs: np.ndarray, reference_site: int, convention: str) -> CorrelationCurve:
    ref = probs[:, reference_site : reference_site + 1]
    samples = probs[:, reference_site + 1 :] * ref
    r = samples.shape[0]
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.full(mean.shape, np.nan)
    seps = np.arange(1, samples.shape[1] + 1)
    return CorrelationCurve(seps, mean, stderr, r, convention, reference_site, samples)


def correlation_curve(
    spec: DisorderSpec,
    n_realizations: int,
    source: Source = "exact",
    convention: str = PER_SITE,
    reference_site: int = 1,
    threads: int = 1,
) -> CorrelationCurve:
    """Average correlation with ``reference_site`` over ``n_realizations``.

    Parameters
    ----------
    source : "exact" or ProtocolSpec
        ``"exact"`` uses the closed-form zero mode of each drawn profile.
        A :class:`ProtocolSpec` uses the end state of the preparation run; its
        disorder is replaced by ``spec`` with the first site pinned.
    """
    _check_convention(convention)
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    if not 0 <= reference_site <= spec.n_bulk:
        raise IndexError("reference site must leave at least one site to its right")
    if isinstance(source, ProtocolSpec):
        protocol = replace(source, disorder=replace(spec, pin_first_site=True))
        probs = _rows(_adiabatic_rows, protocol, n_realizations, convention, threads)
    elif source == "exact":
        if spec.theta_mean != 0.0:
            raise ValueError("the exact source expects theta_mean = 0")
        probs = _rows(_exact_rows, spec, n_realizations, convention, threads)
    else:
        raise ValueError(f"unknown source {source!r}")
    return _curve_from_probs(probs, reference_site, convention)


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through ``(ln s, ln mean_corr)`` inside ``window``.

    ``window`` is given in ``ln s``.  ``slope_stderr`` comes from a
    realization-level bootstrap and is NaN when no samples were kept.
    """

    slope: float
    intercept: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    n_realizations: int
    slope_stderr: float = math.nan

    def record(self) -> str:
        """One-line ``key=value`` summary."""
        return (
            f"slope={self.slope!r} intercept={self.intercept!r} "
            f"window={self.window[0]!r},{self.window[1]!r} r2={self.r_squared!r} "
            f"n_realizations={self.n_realizations} slope_stderr={self.slope_stderr!r}"
        )


def default_window(max_separation: int) -> tuple[float, float]:
    """Separations ``2 .. ceil(max/2)`` in ``ln s``, widened to hold five points.

    Separation 1 is dropped as a short-distance transient.  The far half of
    the chain is dropped because the reflecting end lifts the correlation
    there (the local log-log slope turns back up well before the last 10%).
    """
    lo = 2
    hi = max(math.ceil(max_separation / 2), lo + MIN_FIT_POINTS - 1)
    if hi > max_separation:
        raise FitWindowError(f"chain too short for a {MIN_FIT_POINTS}-point window")
    return (math.log(lo), math.log(hi))


def _in_window(seps: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    x = np.log(seps)
    eps = 1e-12
    return (x >= window[0] - eps) & (x <= window[1] + eps)


def fit_power_law(
    curve: CorrelationCurve,
    window: tuple[float, float] | None = None,
    n_bootstrap: int = N_BOOTSTRAP,
    seed: int = 0,
) -> PowerLawFit:
    """Fit ``ln mean_corr = slope * ln s + intercept`` over ``window``.

    Raises
    ------
    FitWindowError
        If the window holds fewer than five separations.
    """
    if window is None:
        window = default_window(int(curve.separations.max()))
    keep = _in_window(curve.separations, window)
    x = np.log(curve.separations[keep])
    fit = line_fit(x, np.log(curve.mean_corr[keep]))
    stderr = math.nan
    if curve.samples is not None and n_bootstrap > 0 and curve.realization_count > 1:
        rng = np.random.default_rng(seed)
        r = curve.realization_count
        weights = rng.multinomial(r, np.full(r, 1.0 / r), size=n_bootstrap)
        means = weights @ curve.samples[:, keep] / r
        xc = x - x.mean()
        ly = np.log(means)
        slopes = (ly - ly.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)
        stderr = float(np.std(slopes, ddof=1))
    return PowerLawFit(
        fit.slope, fit.intercept, (float(window[0]), float(window[1])), fit.r_squared, fit.n_points,
        curve.realization_count, stderr,
    )


@dataclass(frozen=True)
class SourceComparison:
    exact: PowerLawFit
    adiabatic: PowerLawFit
    mean_fidelity: float

    @property
    def slope_difference(self) -> float:
        return self.adiabatic.slope - self.exact.slope


def compare_sources(
    spec: DisorderSpec,
    protocol: ProtocolSpec,
    n_realizations: int,
    window: tuple[float, float] | None = None,
    convention: str = PER_SITE,
    threads: int = 1,
) -> tuple[SourceComparison, CorrelationCurve, CorrelationCurve]:
    """Exact and prepared zero modes on the same realizations.

    The exact reference for each realization is the zero mode of the
    schedule's final profile, which is the state the preparation aims at.
    Returns the paired fits and both curves.
    """
    _check_convention(convention)
    protocol = replace(protocol, disorder=replace(spec, pin_first_site=True))
    chunks = _chunks(n_realizations, 4 * threads if threads > 1 else 1)

    def work(c: range):
        pairs, _ = final_states(protocol, c)
        targets = np.array([build_zero_mode(angle_schedule(protocol, protocol.total_time, k)).pairs for k in c])
        fid = np.abs(np.einsum("rij,rij->r", targets.conj(), pairs)) ** 2
        return site_probabilities(targets, convention), site_probabilities(pairs, convention), fid

    if threads <= 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    exact_p = np.concatenate([p[0] for p in parts])
    adia_p = np.concatenate([p[1] for p in parts])
    fid = np.concatenate([p[2] for p in parts])
    ce = _curve_from_probs(exact_p, 1, convention)
    ca = _curve_from_probs(adia_p, 1, convention)
    return SourceComparison(fit_power_law(ce, window), fit_power_law(ca, window), float(fid.mean())), ce, ca
