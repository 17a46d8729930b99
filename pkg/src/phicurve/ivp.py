"""Adaptive Dormand-Prince 5(4) integrator with continuous output.

Coefficients from Hairer, Norsett & Wanner, Solving ODEs I (2nd ed.),
Table 5.2; the dense-output polynomial is the fourth-order continuous
extension of the same pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between fifth- and fourth-order weights, FSAL stage last
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXP = -1.0 / 5.0


class IntegrationError(RuntimeError):
    """Step size underflow; ``t`` is the time at which integration stalled."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class DomainEscapeError(IntegrationError):
    """The right-hand side returned a non-finite value."""


@dataclass
class IvpSolution:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), n)
    y_final: np.ndarray
    nsteps: int
    nrejected: int
    nfev: int


def _rms(x):
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(fun, t0, y0, f0, direction, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = fun(t0 + h0 * direction, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate(fun, t0: float, y0, t1: float, rtol: float = 1e-10, atol: float = 1e-12,
              t_eval=None, max_steps: int = 1_000_000, land_on_eval: bool = False) -> IvpSolution:
    """Integrate y' = fun(t, y) from t0 to t1.

    ``t1`` may lie below ``t0`` (backward integration). States at the times
    in ``t_eval`` (monotone in the direction of integration) are taken from
    the dense-output polynomial of the step that covers them. With
    ``land_on_eval`` steps are shortened to end exactly on those times, so
    samples are step endpoints instead of interpolated values.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    if t1 == t0:
        raise ValueError("empty integration interval")
    y = np.array(y0, dtype=float).ravel()
    n = y.size
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    h_min = 1e-14 * span

    if t_eval is None:
        t_eval = np.empty(0)
    t_eval = np.asarray(t_eval, dtype=float)
    out = np.empty((t_eval.size, n))
    key = direction * t_eval  # increasing
    if np.any(np.diff(key) < 0):
        raise ValueError("t_eval must be monotone in the direction of integration")
    i_eval = 0
    while i_eval < t_eval.size and key[i_eval] <= direction * t0:
        out[i_eval] = y
        i_eval += 1

    def F(t, yy):
        f = np.asarray(fun(t, yy), dtype=float)
        if not math.isfinite(f.sum()):
            raise DomainEscapeError(f"non-finite right-hand side at t={t:.6g}", t)
        return f

    f = F(t0, y)
    nfev = 1
    h = min(_initial_step(F, t0, y, f, direction, rtol, atol), span)
    nfev += 1
    K = np.empty((7, n))
    t = t0
    nsteps = nrej = 0
    while direction * (t1 - t) > 0:
        if nsteps + nrej >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        if h < h_min:
            raise IntegrationError(f"step size underflow at t={t:.6g}", t)
        # h is the controller's proposal; h_try may be shortened to hit a stop
        h_try, t_new, landed = h, None, False
        if h_try >= abs(t1 - t):
            h_try, t_new = abs(t1 - t), t1
        if land_on_eval and i_eval < t_eval.size and direction * t + h_try >= key[i_eval]:
            h_try, t_new, landed = abs(t_eval[i_eval] - t), t_eval[i_eval], True
        hs = h_try * direction
        if t_new is None:
            t_new = t + hs
        K[0] = f
        for s in range(1, 6):
            K[s] = F(t + C[s] * hs, y + hs * (A[s] @ K[:s]))
        y_new = y + hs * (B @ K[:6])
        f_new = F(t_new, y_new)
        K[6] = f_new
        nfev += 6
        scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        err = _rms(hs * (E @ K) / scale)
        fac = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err**ERR_EXP)
        if err <= 1.0:
            nsteps += 1
            while i_eval < t_eval.size and key[i_eval] <= direction * t_new:
                if landed and t_eval[i_eval] == t_new:
                    out[i_eval] = y_new
                else:
                    x = (t_eval[i_eval] - t) / hs
                    out[i_eval] = y + hs * (K.T @ (P @ np.array([x, x * x, x**3, x**4])))
                i_eval += 1
            t, y, f = t_new, y_new, f_new
            h = max(h, h_try * fac) if landed else h_try * fac
        else:
            nrej += 1
            h = h_try * max(MIN_FACTOR, fac)
    if i_eval < t_eval.size:
        raise ValueError("t_eval extends beyond the integration interval")
    return IvpSolution(t_eval, out, y, nsteps, nrej, nfev)
