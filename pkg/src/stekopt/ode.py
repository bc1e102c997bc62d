"""Adaptive Dormand-Prince 5(4) integrator.

A plain explicit embedded pair with FSAL, local extrapolation and the usual
``0.9 * err^(-1/5)`` step controller.  A step is accepted when every
component of the error estimate satisfies ``|e_i| <= max(rtol |y_i|, atol)``.  Integrates in either direction of time;
the trajectory code runs it from t0 down to 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["StepSizeUnderflow", "StepLimitExceeded", "ODEResult", "dopri5"]

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
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


class StepSizeUnderflow(RuntimeError):
    def __init__(self, t: float, y: np.ndarray, h: float):
        self.t = t
        self.y = y
        self.h = h
        super().__init__(f"step size underflow at t={t:.15g} (|h|={abs(h):.3e})")


class StepLimitExceeded(RuntimeError):
    def __init__(self, t: float, y: np.ndarray, steps: int):
        self.t = t
        self.y = y
        super().__init__(f"step limit of {steps} accepted steps reached at t={t:.15g}")


@dataclass
class ODEResult:
    t: np.ndarray
    y: np.ndarray
    n_accepted: int
    n_rejected: int
    n_rhs: int


def _error_norm(err, y, y_new, rtol, atol):
    # componentwise |e_i| <= max(rtol |y_i|, atol), worst component decides
    scale = np.maximum(rtol * np.maximum(np.abs(y), np.abs(y_new)), atol)
    return float(np.max(np.abs(err) / scale))


def _initial_step(fun, t0, y0, f0, direction, rtol, atol, span):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = fun(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def dopri5(fun: Callable[[float, np.ndarray], np.ndarray], t0: float, t1: float, y0, *,
           rtol: float = 1e-8, atol: float = 1e-8, first_step: float | None = None,
           max_steps: int = 200_000, min_step_rel: float = 1e-14,
           on_step: Callable[[float, np.ndarray], None] | None = None,
           defect: Callable[[float, np.ndarray], tuple[np.ndarray, float]] | None = None) -> ODEResult:
    """Integrate ``y' = fun(t, y)`` from `t0` to `t1`.

    `on_step` is called after every accepted step and may raise to abort.
    `defect`, when given, returns ``(delta, noise)``: an estimate of the global
    error ``y - y_true(t)`` (e.g. from an invariant the exact solution
    satisfies) and its rounding level.  The change of delta over a step is
    held to the same tolerance as the embedded estimate, but never below the
    combined rounding level.  This guards against steps where the embedded
    estimate happens to vanish.
    Raises :class:`StepSizeUnderflow` when the controller asks for a step below
    ``min_step_rel * max(|t0|, |t1|)``.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    t1 = float(t1)
    span = abs(t1 - t)
    direction = 1.0 if t1 >= t else -1.0
    ts = [t]
    ys = [y.copy()]
    if span == 0.0:
        return ODEResult(np.array(ts), np.array(ys), 0, 0, 0)
    h_min = min_step_rel * max(abs(t0), abs(t1))
    f = fun(t, y)
    n_rhs = 1
    h = first_step if first_step is not None else _initial_step(fun, t, y, f, direction, rtol, atol, span)
    if first_step is None:
        n_rhs += 1
    n_acc = n_rej = 0
    K = np.empty((7, y.size))
    d_prev = None if defect is None else defect(t, y)
    while direction * (t1 - t) > 0.0:
        if h < h_min:
            raise StepSizeUnderflow(t, y, h)
        last = h >= abs(t1 - t)
        if last:
            h = abs(t1 - t)
        hs = direction * h
        t_new = t1 if last else t + hs
        K[0] = f
        for i in range(1, 7):
            yi = y + hs * (np.asarray(_A[i]) @ K[:i])
            K[i] = fun(t_new if i == 6 else t + _C[i] * hs, yi)
        n_rhs += 6
        y_new = yi  # the stage-7 argument is the 5th-order solution
        err = _error_norm(hs * (_E @ K), y, y_new, rtol, atol)
        d_new = None
        if defect is not None and err <= 1.0:
            d_new = defect(t_new, y_new)
            floor = d_new[1] + d_prev[1]
            err = max(err, _error_norm(d_new[0] - d_prev[0], y, y_new, rtol, max(atol, floor)))
        if err <= 1.0:
            t = t_new
            y = y_new
            f = K[6].copy()
            d_prev = d_new
            n_acc += 1
            ts.append(t)
            ys.append(y.copy())
            if on_step is not None:
                on_step(t, y)
            fac = _FAC_MAX if err == 0.0 else min(_FAC_MAX, max(_FAC_MIN, _SAFETY * err ** -0.2))
            h *= fac
            if n_acc >= max_steps and direction * (t1 - t) > 0.0:
                raise StepLimitExceeded(t, y, max_steps)
        else:
            n_rej += 1
            h *= min(1.0, max(_FAC_MIN, _SAFETY * err ** -0.2))
    return ODEResult(np.array(ts), np.array(ys), n_acc, n_rej, n_rhs)
