"""Compiled inner loops.

The winding kernels evolve a real 2-vector through alternating rotations by
``omega`` and diagonal stretches.  The vector's direction is kept as an
integer quadrant index ``q`` plus a local angle ``a`` in ``[0, pi/2)``, so
the unwrapped angle ``q*pi/2 + a`` is exact in its integer part no matter
how many turns accumulate.  A stretch ``diag(cx, cy)`` with positive entries
never moves the vector out of its quadrant, which is why only the rotation
sub-step updates ``q``.  A negative stretch factor is a reflection through
the origin combined with a positive stretch; it is booked as ``q += 2``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_HALF_PI = 0.5 * math.pi


@njit(cache=True, nogil=True)
def _rotate(q, a, omega):
    a += omega
    # Negative wrap first: a tiny negative angle can round up to exactly pi/2,
    # which the second loop then folds back to 0.
    while a < 0.0:
        a += _HALF_PI
        q -= 1
    while a >= _HALF_PI:
        a -= _HALF_PI
        q += 1
    return q, a


@njit(cache=True, nogil=True)
def _stretch(q, a, t):
    # t = tan(vartheta) > 0; the x-axis gets t and the y-axis 1/t in the
    # global frame.  Inside odd quadrants the local frame has the axes swapped.
    if q % 2 == 0:
        cx = t
        cy = 1.0 / t
    else:
        cx = 1.0 / t
        cy = t
    c = math.cos(a) * cx
    s = math.sin(a) * cy
    return math.atan2(s, c), 0.5 * math.log(c * c + s * s)


@njit(cache=True, nogil=True)
def wind(tv, omega, q0):
    """Final winding state after ``N+1`` rotations and ``N`` stretches.

    Returns ``(q, a, flips, crossings, log_norm)``.
    """
    q = q0
    a = 0.0
    flips = 0
    crossings = 0
    lognorm = 0.0
    n = tv.shape[0]
    for i in range(n + 1):
        qb = q
        q, a = _rotate(q, a, omega)
        crossings += q - qb
        if i == n:
            break
        t = tv[i]
        if t < 0.0:
            t = -t
            q += 2
            flips += 1
        a, dl = _stretch(q, a, t)
        lognorm += dl
    return q, a, flips, crossings, lognorm


@njit(cache=True, nogil=True)
def wind_steps(tv, omega, q0):
    """Per-step record of :func:`wind`.

    Entry ``k`` describes the vector after the ``k``-th rotation and the
    stretch that follows it (the last entry has no stretch).
    """
    n = tv.shape[0]
    qs = np.empty(n + 1, dtype=np.int64)
    angs = np.empty(n + 1)
    flp = np.empty(n + 1, dtype=np.int64)
    crs = np.empty(n + 1, dtype=np.int64)
    lns = np.empty(n + 1)
    q = q0
    a = 0.0
    flips = 0
    crossings = 0
    lognorm = 0.0
    for i in range(n + 1):
        qb = q
        q, a = _rotate(q, a, omega)
        crossings += q - qb
        if i < n:
            t = tv[i]
            if t < 0.0:
                t = -t
                q += 2
                flips += 1
            a, dl = _stretch(q, a, t)
            lognorm += dl
        qs[i] = q
        angs[i] = a
        flp[i] = flips
        crs[i] = crossings
        lns[i] = lognorm
    return qs, angs, flp, crs, lns
