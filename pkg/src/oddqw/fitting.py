"""Straight-line fits in log coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import FitWindowError

MIN_FIT_POINTS = 5


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def line_fit(x: np.ndarray, y: np.ndarray, min_points: int = MIN_FIT_POINTS) -> LineFit:
    """Ordinary least squares ``y = slope * x + intercept``.

    Raises
    ------
    FitWindowError
        Fewer than ``min_points`` finite points, or all ``x`` identical.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < min_points:
        raise FitWindowError(f"fit needs at least {min_points} points, window holds {x.size}")
    if np.ptp(x) == 0.0:
        raise FitWindowError("fit window has zero width in x")
    res = stats.linregress(x, y)
    r2 = float(res.rvalue**2) if np.ptp(y) > 0 else 1.0
    return LineFit(float(res.slope), float(res.intercept), r2, int(x.size))
