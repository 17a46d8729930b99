"""Newton iteration, continuation in kappa and sweeps in the mean value xi.

A solution is written u = xi + U with U of zero mean. For fixed xi the
zero-mean part solves

    (phi(U'))' + lam U' + kappa g(xi + U) - (kappa/T) int g(xi + U) = e(t),

and the forcing mean follows as mu = (kappa/T) int_0^T g(xi + U) dt.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .ivp import IntegrationError
from .linear_periodic import LinearPeriodicProblem, ResonanceError, solve_zero_average
from .model import ProblemSpec
from .periodic_fn import PeriodicFunction, PeriodicGrid, derivative, integral, mean
from .phi_linear import base_solution

log = logging.getLogger(__name__)


class DomainError(RuntimeError):
    """An iterate has |U'| too close to the edge of the phi domain."""


class NewtonFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    newton_tol: float = 1e-10
    max_newton_iters: int = 12
    n_kappa_steps: int = 10
    min_kappa_fraction: float = 1e-4
    rtol: float = 1e-10
    atol: float = 1e-12
    domain_margin: float = 1e-6
    # run exactly this many Newton steps instead of iterating to newton_tol
    fixed_iterations: int | None = None
    min_dxi_fraction: float = 1.0 / 1024


@dataclass(frozen=True)
class NewtonStepReport:
    index: int
    U_next: PeriodicFunction
    mu_star: float
    residual: float
    correction: float
    mu_star_identity_defect: float
    averaging_defect: float
    mean_defect: float


@dataclass
class PeriodicSolution:
    xi: float
    mu: float
    U: PeriodicFunction
    kappa: float
    u0: float
    uprime0: float
    sup_uprime: float
    variation: float
    residual: float
    alpha: float
    newton_iterations: int
    steps: list = field(default_factory=list, repr=False)

    @property
    def grid(self) -> PeriodicGrid:
        return self.U.grid

    @property
    def u(self) -> PeriodicFunction:
        return self.U + self.xi

    @property
    def uprime(self) -> PeriodicFunction:
        return derivative(self.U, 1)


@dataclass
class BranchPoint:
    xi: float
    solution: PeriodicSolution | None
    verification: object | None = None
    flag: str = ""

    @property
    def mu(self) -> float:
        return self.solution.mu if self.solution is not None else math.nan

    @property
    def accepted(self) -> bool:
        return self.solution is not None and (self.verification is None or self.verification.passed)


@dataclass
class BranchCurve:
    points: list
    xi0: float
    dxi: float
    nsteps: int

    @property
    def solved(self) -> list:
        return [p for p in self.points if p.solution is not None]

    @property
    def xi(self) -> np.ndarray:
        return np.array([p.xi for p in self.solved])

    @property
    def mu(self) -> np.ndarray:
        return np.array([p.mu for p in self.solved])

    @property
    def all_verified(self) -> bool:
        return all(p.accepted for p in self.points)


def _grid(spec: ProblemSpec) -> PeriodicGrid:
    return PeriodicGrid(spec.T, spec.N)


def equation_residual(spec: ProblemSpec, xi: float, kappa: float, U: PeriodicFunction) -> float:
    """sup |F(U) - e| for the zero-mean equation at coupling kappa.

    Returns nan when U' leaves the domain of phi.
    """
    dU = derivative(U, 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        flux = PeriodicFunction(U.grid, spec.phi.phi(dU.samples))
    gu = spec.g.g(xi + U.samples)
    r = (derivative(flux, 1).samples + spec.lam * dU.samples + kappa * gu
         - kappa * np.mean(gu) - spec.forcing(U.grid.nodes))
    return float(np.max(np.abs(r)))


def newton_step(spec: ProblemSpec, xi: float, kappa: float, U: PeriodicFunction,
                settings: SolverSettings = SolverSettings(), index: int = 0) -> NewtonStepReport:
    """One Newton step for the zero-mean equation, linearized at U."""
    phi, g = spec.phi, spec.g
    dU = derivative(U, 1).samples
    d2U = derivative(U, 2).samples
    if np.max(np.abs(dU)) >= phi.a - settings.domain_margin:
        raise DomainError(f"sup|U'| = {np.max(np.abs(dU)):.6g} reaches the phi domain edge")
    grid = U.grid
    u = xi + U.samples
    gu, dgu = g.g(u), g.dg(u)
    d2phi = phi.d2phi(dU)
    a = PeriodicFunction(grid, phi.dphi(dU))
    da = PeriodicFunction(grid, d2phi * d2U)  # chain rule instead of differentiating a
    b = PeriodicFunction(grid, kappa * dgu)
    f = PeriodicFunction(grid, d2phi * dU * d2U + kappa * dgu * U.samples - kappa * gu
                         + spec.forcing(grid.nodes))
    lin = solve_zero_average(LinearPeriodicProblem(a, b, f, spec.lam, da),
                             rtol=settings.rtol, atol=settings.atol)
    U_next = lin.y
    mu_star = lin.mu_star
    step = U_next.samples - U.samples
    predicted = kappa * float(np.mean(gu + dgu * step))
    return NewtonStepReport(
        index=index,
        U_next=U_next,
        mu_star=mu_star,
        residual=equation_residual(spec, xi, kappa, U_next),
        correction=float(np.max(np.abs(step))),
        mu_star_identity_defect=abs(mu_star - predicted),
        averaging_defect=lin.averaging_defect,
        mean_defect=abs(mean(U_next)),
    )


def newton(spec: ProblemSpec, xi: float, kappa: float, U: PeriodicFunction,
           settings: SolverSettings = SolverSettings()):
    """Iterate newton_step from U; returns (U, list of step reports)."""
    reports = []
    n_max = settings.fixed_iterations or settings.max_newton_iters
    for i in range(n_max):
        try:
            rep = newton_step(spec, xi, kappa, U, settings, index=i)
        except (ResonanceError, IntegrationError) as exc:
            raise NewtonFailure(f"linear solve failed at xi={xi:.6g}, kappa={kappa:.6g}: {exc}") from exc
        reports.append(rep)
        U = rep.U_next
        if not np.isfinite(rep.correction):
            raise NewtonFailure("non-finite Newton correction")
        if settings.fixed_iterations is None and rep.correction < settings.newton_tol:
            return U, reports
    if settings.fixed_iterations is not None:
        return U, reports
    raise NewtonFailure(f"no convergence at xi={xi:.6g}, kappa={kappa:.6g} "
                        f"(last correction {reports[-1].correction:.3e})")


def mu_of(spec: ProblemSpec, xi: float, U: PeriodicFunction, kappa: float | None = None) -> float:
    kappa = spec.k if kappa is None else kappa
    return kappa * float(np.mean(spec.g.g(xi + U.samples)))


def _package(spec, xi, U, kappa, reports) -> PeriodicSolution:
    grid = U.grid
    mu = mu_of(spec, xi, U, kappa)
    dU = derivative(U, 1)
    fine = U.refine(8 * grid.N)
    sup_up = float(np.max(np.abs(dU.refine(8 * grid.N))))
    u = xi + U.samples
    rhs = kappa * spec.g.g(u) - mu - spec.forcing(grid.nodes) + spec.lam * dU.samples
    alpha = float(spec.phi.psi(integral(PeriodicFunction(grid, np.abs(rhs)))))
    return PeriodicSolution(
        xi=xi, mu=mu, U=U, kappa=kappa,
        u0=xi + float(U.samples[0]), uprime0=float(dU.samples[0]),
        sup_uprime=sup_up, variation=float(fine.max() - fine.min()),
        residual=equation_residual(spec, xi, kappa, U),
        alpha=alpha, newton_iterations=len(reports), steps=reports,
    )


def continue_in_kappa(spec: ProblemSpec, xi: float, settings: SolverSettings = SolverSettings()):
    """Deform the exact kappa = 0 solution into the kappa = k solution at fixed xi."""
    base = base_solution(spec, xi)
    U = base.u - xi
    U = PeriodicFunction(U.grid, U.samples - U.samples.mean())
    k = spec.k
    dk = k / settings.n_kappa_steps
    dk_min = settings.min_kappa_fraction * k
    kappa = 0.0
    reports = []
    while kappa < k:
        target = min(kappa + dk, k)
        if k - target < 1e-12 * k:
            target = k
        try:
            U_new, reps = newton(spec, xi, target, U, settings)
        except (NewtonFailure, DomainError) as exc:
            dk *= 0.5
            log.debug("kappa step rejected (%s); dk -> %.3e", exc, dk)
            if dk < dk_min:
                raise NewtonFailure(f"kappa continuation stalled at kappa={kappa:.6g}") from exc
            continue
        U, kappa = U_new, target
        reports.extend(reps)
    return U, reports


def solve_at_xi(spec: ProblemSpec, xi: float, warm_start: PeriodicSolution | None = None,
                settings: SolverSettings = SolverSettings()) -> PeriodicSolution:
    """Periodic solution with mean xi at kappa = k, and its mu."""
    if warm_start is not None:
        U0 = warm_start.U
        if U0.grid != _grid(spec):
            raise ValueError("warm start lives on a different grid")
        U, reports = newton(spec, xi, spec.k, U0, settings)
    else:
        U, reports = continue_in_kappa(spec, xi, settings)
    return _package(spec, xi, U, spec.k, reports)


def sweep_xi(spec: ProblemSpec, xi0: float, dxi: float, nsteps: int,
             settings: SolverSettings = SolverSettings(), verify: bool = True,
             verify_rtol: float = 1e-11, progress=None) -> BranchCurve:
    """Solutions at xi_i = xi0 + i*dxi, i = 0..nsteps, warm-starting along the way.

    On Newton failure the step towards the next grid value is halved and
    stepping-stone solutions are computed in between; the step is restored
    after two consecutive successes. A grid value that cannot be reached
    even from a cold start is recorded as a flagged gap.
    """
    if dxi == 0:
        raise ValueError("dxi must be nonzero")
    if verify:
        from .analysis import verify_by_shooting

    def finish(xi, sol, flag=""):
        ver = verify_by_shooting(spec, sol, rtol=verify_rtol) if (verify and sol is not None) else None
        pt = BranchPoint(xi, sol, ver, flag)
        if ver is not None and not ver.passed:
            pt.flag = pt.flag or "verification failed"
        if progress is not None:
            progress(pt)
        return pt

    try:
        first = solve_at_xi(spec, xi0, None, settings)
    except (NewtonFailure, DomainError) as exc:
        raise NewtonFailure(f"could not solve the first sweep point xi={xi0}: {exc}") from exc
    points = [finish(xi0, first)]
    current = first
    h = dxi
    h_min = abs(dxi) * settings.min_dxi_fraction
    streak = 0
    for i in range(1, nsteps + 1):
        target = xi0 + i * dxi
        sol = None
        xi_c = current.xi
        while sol is None:
            nxt = xi_c + h
            if (nxt - target) * np.sign(dxi) >= -1e-12 * abs(dxi):
                nxt = target
            try:
                cand = solve_at_xi(spec, nxt, current, settings)
            except (NewtonFailure, DomainError) as exc:
                h *= 0.5
                streak = 0
                if abs(h) < h_min:
                    log.warning("warm start failed at xi=%.6g (%s); trying cold start", target, exc)
                    try:
                        cand = solve_at_xi(spec, target, None, settings)
                    except (NewtonFailure, DomainError):
                        points.append(finish(target, None, "unsolved"))
                        h = dxi
                        break
                    current, sol, h = cand, cand, dxi
                    break
                continue
            current, xi_c = cand, nxt
            streak += 1
            if streak >= 2 and abs(h) < abs(dxi):
                h = min(abs(2 * h), abs(dxi)) * np.sign(dxi)
                streak = 0
            if nxt == target:
                sol = cand
        if sol is not None:
            points.append(finish(target, sol))
    return BranchCurve(points, xi0, dxi, nsteps)


def with_settings(settings: SolverSettings, **changes) -> SolverSettings:
    return replace(settings, **{k: v for k, v in changes.items() if v is not None})
