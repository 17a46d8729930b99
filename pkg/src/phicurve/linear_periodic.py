"""Periodic solutions of L[y] = (a y')' + lam y' + b y = f via fundamental solutions.

The general solution is a particular solution plus a combination of two
homogeneous solutions; the combination is fixed by matching y and y' over
one period. The zero-average variant adds the unknown constant mu* to the
right-hand side and the constraint int y = 0, giving a 3x3 bordered system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ivp
from .periodic_fn import PeriodicFunction, TrigInterpolant, derivative, integral

COND_CAP = 1e12
# smallest singular value must exceed this multiple of rtol (times the data scale)
RESONANCE_FACTOR = 100.0


class ResonanceError(np.linalg.LinAlgError):
    """The matching system is (numerically) singular."""


@dataclass(frozen=True)
class LinearPeriodicProblem:
    a: PeriodicFunction
    b: PeriodicFunction
    f: PeriodicFunction
    lam: float = 0.0
    da: PeriodicFunction | None = None  # a'(t); spectral derivative of a when omitted

    @property
    def grid(self):
        return self.a.grid

    @property
    def a_min(self) -> float:
        return float(np.min(self.a.samples))


@dataclass
class LinearPeriodicSolution:
    y: PeriodicFunction
    mu_star: float | None
    condition: float
    periodicity_defect: float
    residual: float
    averaging_defect: float | None = None
    basis: dict = field(default_factory=dict, repr=False)


# column order of the fundamental system
_Y1, _Y2, _YF, _YU = range(4)


def _fundamental(p: LinearPeriodicProblem, with_unit: bool, rtol: float, atol: float):
    """Integrate y1, y2, Y_f (and Y_1 for f = 1) with their running integrals."""
    if p.a_min <= 0:
        raise ValueError(f"leading coefficient must be positive, min a = {p.a_min:.3e}")
    grid = p.grid
    da = p.da if p.da is not None else derivative(p.a, 1)
    coef = _StageCache(TrigInterpolant([p.a, da, p.b, p.f]))
    lam = p.lam
    m = 4 if with_unit else 3

    src = np.zeros(m)
    if with_unit:
        src[_YU] = 1.0
    out = np.empty(3 * m)

    def rhs(t, s):
        a, ad, b, f = coef(t)
        src[_YF] = f
        y = s[:m]
        v = s[m:2 * m]
        out[:m] = v
        out[m:2 * m] = (src - (ad + lam) * v - b * y) / a
        out[2 * m:] = y
        return out.copy()

    y0 = np.zeros(m)
    v0 = np.zeros(m)
    y0[_Y2] = 1.0
    v0[_Y1] = 1.0
    v0[_YF] = 1.0  # particular solution starts from (0, 1); the offset is absorbed by y1
    s0 = np.concatenate((y0, v0, np.zeros(m)))
    sol = ivp.integrate(rhs, 0.0, s0, grid.T, rtol=rtol, atol=atol, t_eval=grid.nodes, land_on_eval=True)
    end = sol.y_final
    nodes_y = sol.y[:, :m]
    return m, s0, end, nodes_y, sol


class _StageCache:
    """Coefficient values at the Runge-Kutta stage times of node-to-node steps.

    The integrator lands on every grid node, so when its proposed step exceeds
    the node spacing each step spans exactly one grid interval and all stage
    times are known in advance. They are evaluated in one vectorized call;
    any other time falls back to direct evaluation.
    """

    def __init__(self, interp: TrigInterpolant):
        grid = interp.grid
        stops = np.append(grid.nodes, grid.T)
        left = stops[:-1]
        h = grid.T / grid.N
        self.interp = interp
        self._table = {}
        for c in ivp.C[:-1]:
            vals = interp.on_shifted_grid(c * h).T
            times = left + c * (stops[1:] - left)
            self._table.update(zip(times.tolist(), vals))

    def __call__(self, t):
        v = self._table.get(t)
        return v if v is not None else self.interp(t)


def _check_condition(M, what, scale=1.0, rtol=1e-10):
    """Reject matching systems that are singular in relative or absolute terms.

    The condition number alone misses exact resonance, where M = Phi(T) - I
    is uniformly tiny (integration noise) rather than ill-conditioned. So the
    smallest singular value is also compared with the integration accuracy
    at the scale of the fundamental data.
    """
    sv = np.linalg.svd(M, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if not np.isfinite(cond) or cond > COND_CAP:
        raise ResonanceError(f"{what} matching system is singular (cond = {cond:.3e})")
    if sv[-1] <= RESONANCE_FACTOR * rtol * max(1.0, scale):
        raise ResonanceError(f"{what} matching system vanishes to integration accuracy "
                             f"(smallest singular value {sv[-1]:.3e})")
    return cond


def _residual(p: LinearPeriodicProblem, y: PeriodicFunction, rhs: np.ndarray) -> float:
    da = p.da if p.da is not None else derivative(p.a, 1)
    dy = derivative(y, 1).samples
    d2y = derivative(y, 2).samples
    Ly = p.a.samples * d2y + (da.samples + p.lam) * dy + p.b.samples * y.samples
    return float(np.max(np.abs(Ly - rhs)))


def solve_periodic(p: LinearPeriodicProblem, rtol: float = 1e-10, atol: float = 1e-12) -> LinearPeriodicSolution:
    """T-periodic solution of L[y] = f."""
    m, s0, end, nodes_y, _ = _fundamental(p, False, rtol, atol)
    jump = end[:2 * m] - s0[:2 * m]  # (y(T)-y(0), y'(T)-y'(0)) per column
    dy, dv = jump[:m], jump[m:]
    M = np.array([[dy[_Y1], dy[_Y2]], [dv[_Y1], dv[_Y2]]])
    cond = _check_condition(M, "periodic", float(np.max(np.abs(end))), rtol)
    c1, c2 = np.linalg.solve(M, -np.array([dy[_YF], dv[_YF]]))
    w = np.zeros(m)
    w[[_Y1, _Y2, _YF]] = c1, c2, 1.0
    defect = abs(dy @ w) + abs(dv @ w)
    y = PeriodicFunction(p.grid, nodes_y @ w)
    res = _residual(p, y, p.f.samples)
    return LinearPeriodicSolution(y, None, cond, defect, res,
                                  basis={"c1": c1, "c2": c2, "nodes": nodes_y})


def solve_zero_average(p: LinearPeriodicProblem, rtol: float = 1e-10, atol: float = 1e-12) -> LinearPeriodicSolution:
    """Find mu* and zero-mean periodic y with L[y] = mu* + f.

    Writes y = Y_f + mu* Y_1 + c1 y1 + c2 y2 and solves for (c1, c2, mu*)
    from periodicity of y, y' and int_0^T y = 0. Unlike composing two
    inverses of L this stays valid when b vanishes identically.
    """
    m, s0, end, nodes_y, _ = _fundamental(p, True, rtol, atol)
    jump = end[:2 * m] - s0[:2 * m]
    dy, dv = jump[:m], jump[m:]
    q = end[2 * m:]
    cols = [_Y1, _Y2, _YU]
    M = np.array([dy[cols], dv[cols], q[cols]])
    cond = _check_condition(M, "zero-average", float(np.max(np.abs(end[:2 * m]))), rtol)
    c1, c2, mu = np.linalg.solve(M, -np.array([dy[_YF], dv[_YF], q[_YF]]))
    w = np.array([c1, c2, 1.0, mu])
    defect = abs(dy @ w) + abs(dv @ w)
    vals = nodes_y @ w
    vals -= vals.mean()  # remove quadrature-level drift so the grid mean is exactly zero
    y = PeriodicFunction(p.grid, vals)
    res = _residual(p, y, mu + p.f.samples)
    T = p.grid.T
    avg_defect = abs(integral(p.b * y) - T * mu - integral(p.f))
    return LinearPeriodicSolution(y, float(mu), cond, defect, res, avg_defect,
                                  basis={"c1": c1, "c2": c2, "nodes": nodes_y})
