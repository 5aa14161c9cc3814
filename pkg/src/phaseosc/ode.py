"""Dormand–Prince 5(4) integrator with PI step-size control and dense output.

States may be a single vector ``(n,)`` or a batch ``(B, n)``; a batch shares
one step-size sequence, chosen so that every member meets the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

# Butcher tableau (Dormand & Prince 1980)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th and embedded 4th order weights
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])
# Shampine's 4th-order continuous extension: y(t + xh) = y + h K^T (P @ [x, x², x³, x⁴])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

MIN_RTOL = 100 * np.finfo(float).eps
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_BETA = 0.04  # PI controller memory
_EXPO = 0.2 - 0.75 * _BETA


class IntegrationError(RuntimeError):
    """Step size underflow or step budget exhausted."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t = {t_reached!r})")
        self.t_reached = t_reached


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # shape (len(t),) + y0.shape
    n_accepted: int
    n_rejected: int
    n_evals: int
    max_error: float


def _err_norm(delta, y0, y1, rtol, atol, cap):
    mag = np.maximum(np.abs(y0), np.abs(y1))
    if cap is not None:
        mag = np.minimum(mag, cap)
    scale = atol + rtol * mag
    z = (delta / scale) ** 2
    if z.ndim == 1:
        return math.sqrt(float(np.mean(z)))
    return math.sqrt(float(np.max(np.mean(z, axis=-1))))


def _rms(x) -> float:
    return float(np.linalg.norm(np.ravel(x)) / math.sqrt(max(np.size(x), 1)))


def _initial_step(fun, t0, y0, f0, direction, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    if not math.isfinite(h0) or h0 <= 0:
        h0 = 1e-6
    y1 = y0 + direction * h0 * f0
    f1 = fun(t0 + direction * h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    h = min(100 * h0, h1)
    return h if math.isfinite(h) and h > 0 else 1e-6


def dopri5(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    rtol: float = 1e-9,
    atol: float = 1e-11,
    t_eval: Optional[Sequence[float]] = None,
    max_steps: int = 1_000_000,
    h_min: float = 1e-14,
    magnitude_cap: Optional[float] = None,
) -> Solution:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end``.

    Without ``t_eval`` every accepted step is recorded.  With ``t_eval`` the
    solution is sampled at those times (which must lie in the integration
    interval and be monotone in the direction of integration) by the
    continuous extension.

    ``magnitude_cap`` bounds the |y| used in the relative part of the error
    scale; unwrapped phases grow without bound and would otherwise loosen
    the effective tolerance over long runs.
    """
    if not (rtol > 0 and atol > 0):
        raise ValueError(f"tolerances must be positive, got rtol={rtol}, atol={atol}")
    if rtol < MIN_RTOL:
        raise ValueError(f"rtol={rtol} is below the attainable {MIN_RTOL}")
    if t_end == t0:
        raise ValueError("integration interval has zero length")
    direction = 1.0 if t_end > t0 else -1.0
    y = np.array(y0, dtype=float)
    t = float(t0)

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.size and (np.any(direction * np.diff(t_eval) < 0)
                            or direction * (t_eval[0] - t0) < 0 or direction * (t_eval[-1] - t_end) > 0):
            raise ValueError("t_eval must be monotone and inside the integration interval")
    ts: list[float] = []
    ys: list[np.ndarray] = []
    next_eval = 0
    if t_eval is None:
        ts.append(t)
        ys.append(y.copy())
    else:
        while next_eval < t_eval.size and t_eval[next_eval] == t:
            ts.append(t)
            ys.append(y.copy())
            next_eval += 1

    f = fun(t, y)
    n_evals = 1
    h = _initial_step(fun, t, y, f, direction, rtol, atol)
    n_evals += 1
    facold = 1e-4
    n_acc = n_rej = 0
    max_err = 0.0
    K = np.empty((7,) + y.shape)
    reject_last = False

    while direction * (t_end - t) > 0:
        if n_acc + n_rej >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        if h < h_min * max(1.0, abs(t)):
            raise IntegrationError("step size underflow", t)
        last = False
        if h >= abs(t_end - t):
            h = abs(t_end - t)
            last = True
        hs = direction * h
        K[0] = f
        for i in range(1, 7):
            dy = np.tensordot(_A[i], K[:i], axes=(0, 0))
            K[i] = fun(t + _C[i] * hs, y + hs * dy)
        n_evals += 6
        y_new = y + hs * np.tensordot(_B[:6], K[:6], axes=(0, 0))
        err = _err_norm(hs * np.tensordot(_E, K, axes=(0, 0)), y, y_new, rtol, atol, magnitude_cap)

        if not math.isfinite(err):
            # overflow inside the step: shrink hard and retry
            h *= _MIN_FACTOR
            n_rej += 1
            reject_last = True
            continue
        fac11 = err ** _EXPO if err > 0 else 0.0
        if err <= 1.0:
            fac = fac11 / facold ** _BETA
            fac = min(1 / _MIN_FACTOR, max(1 / _MAX_FACTOR, fac / _SAFETY))
            h_new = h / fac
            facold = max(err, 1e-4)
            if reject_last:
                h_new = min(h_new, h)
            t_new = t_end if last else t + hs
            if t_eval is None:
                ts.append(t_new)
                ys.append(y_new.copy())
            else:
                while next_eval < t_eval.size and direction * (t_eval[next_eval] - t_new) <= 0:
                    x = (t_eval[next_eval] - t) / hs
                    Q = np.tensordot(_P @ np.array([x, x * x, x ** 3, x ** 4]), K, axes=(0, 0))
                    ts.append(float(t_eval[next_eval]))
                    ys.append(y + hs * Q)
                    next_eval += 1
            max_err = max(max_err, err)
            t, y, f = t_new, y_new, K[6].copy()
            n_acc += 1
            h = h_new
            reject_last = False
        else:
            h = h / min(1 / _MIN_FACTOR, max(fac11, 1.0) / _SAFETY)
            n_rej += 1
            reject_last = True

    return Solution(np.array(ts), np.array(ys), n_acc, n_rej, n_evals, max_err)
