"""Sign-scan root isolation with bracketed refinement."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import brentq


def scan_roots(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    n: int = 2048,
    xtol: float = 1e-14,
    merge_tol: float = 1e-8,
    exclude_ends: float = 0.0,
) -> list[float]:
    """Roots of a scalar function on [a, b] located by sign changes on an ``n``-cell grid.

    Tangential (even-multiplicity) roots are missed by construction.  Roots
    closer than ``exclude_ends`` to either end are dropped.
    """
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x), dtype=float)
    roots: list[float] = []
    for k in range(n + 1):
        if y[k] == 0.0:
            roots.append(float(x[k]))
    s = np.sign(y)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    scalar = lambda t: float(f(np.array([t]))[0])
    for k in idx:
        roots.append(brentq(scalar, x[k], x[k + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    roots.sort()
    out: list[float] = []
    for r in roots:
        if exclude_ends and (r - a < exclude_ends or b - r < exclude_ends):
            continue
        if not out or r - out[-1] > merge_tol:
            out.append(r)
    return out


def bisect_sign_change(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-13) -> float:
    """Plain bisection on a bracket with f(lo)·f(hi) ≤ 0."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("interval does not bracket a sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
