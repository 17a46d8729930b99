"""Exact periodic solutions of (phi(u'))' + lam u' = e(t) with prescribed mean.

These start the continuation in the coupling constant at kappa = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import ivp
from .model import ProblemSpec
from .periodic_fn import PeriodicFunction, PeriodicGrid, antiderivative, derivative, integral, mean


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class BaseSolutionReport:
    u: PeriodicFunction
    uprime: PeriodicFunction
    case: str  # "lambda_zero" or "lambda_positive"
    constant: float  # C0 for lambda = 0, p0 for lambda > 0
    residual: float
    alpha: float  # a-priori bound on sup|u'|
    xi: float

    @property
    def sup_uprime(self) -> float:
        return float(np.max(np.abs(self.uprime.samples)))


def _bisect(fn, lo, hi, xtol=1e-12, polish=2):
    """Root of a monotone fn on [lo, hi] with a sign change; secant polish at the end."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > xtol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    x0, f0, x1, f1 = lo, flo, hi, fhi
    for _ in range(polish):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not lo - (hi - lo) <= x2 <= hi + (hi - lo):
            break
        x0, f0, x1, f1 = x1, f1, x2, fn(x2)
    return x1 if abs(f1) <= min(abs(flo), abs(fhi)) else (lo if abs(flo) < abs(fhi) else hi)


def _forcing_function(spec: ProblemSpec, grid: PeriodicGrid) -> PeriodicFunction:
    return PeriodicFunction.from_callable(grid, spec.forcing)


def _residual(spec, uprime, e):
    w = PeriodicFunction(uprime.grid, spec.phi.phi(uprime.samples))
    r = derivative(w, 1).samples + spec.lam * uprime.samples - e.samples
    return float(np.max(np.abs(r)))


def _alpha(spec, uprime, e):
    rhs = e - spec.lam * uprime
    return float(spec.phi.psi(integral(PeriodicFunction(rhs.grid, np.abs(rhs.samples)))))


def base_solution_lambda0(spec: ProblemSpec, xi: float, c_start: float | None = None) -> BaseSolutionReport:
    """Case lam = 0: u' = psi(E(t) + C0) with E the running integral of e.

    C0 is the unique root of C -> int_0^T psi(E + C) dt, which is strictly
    increasing. ``c_start`` only changes the initial bracket.
    """
    if spec.lam != 0:
        raise ValueError("base_solution_lambda0 requires lambda = 0")
    grid = PeriodicGrid(spec.T, spec.N)
    e = _forcing_function(spec, grid)
    E = antiderivative(e)
    E = E - E.samples[0]
    psi = spec.phi.psi

    def flux(C):
        return integral(PeriodicFunction(grid, psi(E.samples + C)))

    supE = float(np.max(np.abs(E.samples)))
    limit = supE + 1e3
    half = supE + 1.0 if c_start is None else abs(c_start) + 1.0
    while flux(-half) > 0 or flux(half) < 0:
        half *= 10.0
        if half > limit:
            raise BracketError("no bracket for C0; is psi a valid inverse of phi?")
    C0 = _bisect(flux, -half, half)
    uprime = PeriodicFunction(grid, psi(E.samples + C0))
    u = antiderivative(uprime) + xi
    return BaseSolutionReport(u, uprime, "lambda_zero", C0, _residual(spec, uprime, e),
                              _alpha(spec, uprime, e), xi)


def poincare_map(spec: ProblemSpec, p0: float, rtol: float = 1e-12, atol: float = 1e-14,
                 t_eval=None):
    """Flow of p' = e(t) - lam psi(p) over one period from p(0) = p0."""
    psi, lam, e = spec.phi.psi, spec.lam, spec.forcing

    def rhs(t, p):
        return e(t) - lam * psi(p)

    return ivp.integrate(rhs, 0.0, [p0], spec.T, rtol=rtol, atol=atol, t_eval=t_eval,
                         land_on_eval=t_eval is not None)


def poincare_bracket(spec: ProblemSpec) -> float:
    grid = PeriodicGrid(spec.T, max(spec.N, 256))
    e_abs = integral(PeriodicFunction(grid, np.abs(spec.forcing(grid.nodes))))
    return e_abs + spec.lam * spec.phi.a * spec.T + 1.0


def base_solution_lambda_pos(spec: ProblemSpec, xi: float, bracket: float | None = None) -> BaseSolutionReport:
    """Case lam > 0: periodic orbit of p' + lam psi(p) = e(t), then u' = psi(p).

    p0 -> p(T, p0) - p0 is strictly decreasing, so its root is found by
    bisection on [-P, P].
    """
    if spec.lam <= 0:
        raise ValueError("base_solution_lambda_pos requires lambda > 0")
    grid = PeriodicGrid(spec.T, spec.N)
    e = _forcing_function(spec, grid)

    def defect(p0):
        return float(poincare_map(spec, p0).y_final[0] - p0)

    P = poincare_bracket(spec) if bracket is None else bracket
    if not (defect(-P) > 0 > defect(P)):
        P *= 10.0
        if not (defect(-P) > 0 > defect(P)):
            raise BracketError(f"Poincare map sign conditions fail on [-{P}, {P}]")
    p0 = _bisect(defect, -P, P)
    p = poincare_map(spec, p0, t_eval=grid.nodes).y[:, 0]
    uprime = PeriodicFunction(grid, spec.phi.psi(p))
    m = mean(uprime)
    if abs(m) > 1e-8:
        raise RuntimeError(f"periodic p-orbit gives u' with mean {m:.3e}")
    u = antiderivative(uprime) + xi
    return BaseSolutionReport(u, uprime, "lambda_positive", p0, _residual(spec, uprime, e),
                              _alpha(spec, uprime, e), xi)


# below this value of lam*a*T relative to the bracket, the period map is the
# identity to rounding and the lam = 0 construction is used instead
NEGLIGIBLE_FRICTION = 1e-12


def base_solution(spec: ProblemSpec, xi: float) -> BaseSolutionReport:
    """Exact start for the continuation; dispatches on the friction coefficient.

    For negligible friction the lam = 0 solution is returned; it solves the
    lam > 0 problem up to O(lam) and only serves as a starting point.
    """
    if spec.lam == 0:
        return base_solution_lambda0(spec, xi)
    if spec.lam * spec.phi.a * spec.T <= NEGLIGIBLE_FRICTION * poincare_bracket(spec):
        return base_solution_lambda0(replace(spec, lam=0.0), xi)
    return base_solution_lambda_pos(spec, xi)
