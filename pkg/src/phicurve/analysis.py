"""Independent checks on computed orbits and shape features of the branch mu(xi)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import ivp
from .continuation import BranchCurve, PeriodicSolution
from .model import ProblemSpec
from .periodic_fn import norms

SHOOTING_TOL = 1e-6


@dataclass(frozen=True)
class VerificationReport:
    periodicity_defect: float
    max_deviation: float
    passed: bool
    failure_time: float | None = None
    message: str = ""


def shoot(spec: ProblemSpec, u0: float, uprime0: float, mu: float, rtol: float = 1e-11,
          atol: float = 1e-13, t_eval=None):
    """Integrate the full equation over one period from (u(0), u'(0)).

    Uses the first-order form u' = psi(w), w' = -lam psi(w) - k g(u) + mu + e(t)
    with w = phi(u'), whose right-hand side stays finite near the domain edge.
    Returns (defect, solution).
    """
    phi, psi, g = spec.phi.phi, spec.phi.psi, spec.g.g
    lam, k, e = spec.lam, spec.k, spec.forcing

    def rhs(t, y):
        z = psi(y[1])
        return np.array([z, -lam * z - k * g(y[0]) + mu + e(t)])

    if not abs(uprime0) < spec.phi.a:
        raise ValueError("u'(0) lies outside the domain of phi")
    w0 = float(phi(uprime0))
    sol = ivp.integrate(rhs, 0.0, [u0, w0], spec.T, rtol=rtol, atol=atol, t_eval=t_eval,
                        land_on_eval=t_eval is not None)
    uT, wT = sol.y_final
    defect = abs(uT - u0) + abs(float(psi(wT)) - uprime0)
    return defect, sol


def verify_by_shooting(spec: ProblemSpec, sol: PeriodicSolution, rtol: float = 1e-11,
                       tol: float = SHOOTING_TOL) -> VerificationReport:
    nodes = sol.grid.nodes
    try:
        defect, run = shoot(spec, sol.u0, sol.uprime0, sol.mu, rtol=rtol, t_eval=nodes)
    except ivp.IntegrationError as exc:
        return VerificationReport(math.inf, math.inf, False, exc.t, str(exc))
    dev = float(np.max(np.abs(run.y[:, 0] - sol.u.samples)))
    return VerificationReport(float(defect), dev, bool(defect < tol))


# -- branch features ----------------------------------------------------------


def sign_changes(values: np.ndarray) -> np.ndarray:
    """Indices i where the sign flips between values[i] and the next nonzero value.

    Exact zeros are skipped, so a run of zeros between opposite signs counts
    once and is attached to the interval that enters it.
    """
    s = np.sign(values)
    idx = []
    last = None
    for i, si in enumerate(s):
        if si == 0:
            continue
        if last is not None and si != s[last]:
            idx.append(last)
        last = i
    return np.array(idx, dtype=int)


def count_solutions(xi: np.ndarray, mu: np.ndarray, level: float, window: tuple[float, float] | None = None) -> int:
    """Number of crossings of mu(xi) = level, optionally within a half-open xi window."""
    if window is not None:
        lo, hi = window
        keep = (xi >= lo - 1e-12) & (xi < hi - 1e-12)
        xi, mu = xi[keep], mu[keep]
    return int(sign_changes(mu - level).size)


def zero_crossings(xi: np.ndarray, mu: np.ndarray) -> list[float]:
    out = []
    for i in sign_changes(mu):
        j = i + 1
        if mu[j] == 0:
            out.append(float(xi[j]))
        else:
            out.append(float(xi[i] - mu[i] * (xi[j] - xi[i]) / (mu[j] - mu[i])))
    return out


@dataclass
class BranchFeatures:
    limit_low: float | None
    limit_high: float | None
    mu_minus: float
    mu_plus: float
    period_defect: float | None
    zero_crossings: list
    multiplicity: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "limit_low": self.limit_low,
            "limit_high": self.limit_high,
            "mu_minus": self.mu_minus,
            "mu_plus": self.mu_plus,
            "period_defect": self.period_defect,
            "zero_crossings": self.zero_crossings,
            "multiplicity": {str(k): v for k, v in self.multiplicity.items()},
            "checks": self.checks,
        }


def period_defect(xi: np.ndarray, mu: np.ndarray, period: float) -> float | None:
    """max |mu(xi + p) - mu(xi)| over the overlap, via a cubic spline of the branch."""
    if xi.size < 4 or xi[-1] - xi[0] < period:
        return None
    spline = CubicSpline(xi, mu)
    sel = xi <= xi[-1] - period + 1e-9 * abs(period)
    x = xi[sel]
    shifted = np.minimum(x + period, xi[-1])
    return float(np.max(np.abs(spline(shifted) - mu[sel])))


def branch_features(curve: BranchCurve, spec: ProblemSpec, query_mu=(), n_limit: int = 5) -> BranchFeatures:
    xi, mu = curve.xi, curve.mu
    if xi.size == 0:
        raise ValueError("empty branch")
    order = np.argsort(xi)
    xi, mu = xi[order], mu[order]
    have_ends = xi.size >= 2 * n_limit
    lo = float(np.mean(mu[:n_limit])) if have_ends else None
    hi = float(np.mean(mu[-n_limit:])) if have_ends else None
    g = spec.g
    pdef = period_defect(xi, mu, g.period) if g.shape == "periodic" else None
    window = None
    if g.shape == "periodic" and xi[-1] - xi[0] >= g.period:
        window = (xi[0], xi[0] + g.period)
    mult = {float(q): count_solutions(xi, mu, q, window) for q in query_mu}
    checks = {}
    if g.shape == "saturating":
        lm, lp = g.limits
        checks["strictly_inside_saturation_limits"] = bool(np.all((mu > spec.k * lm) & (mu < spec.k * lp)))
    if g.shape == "vanishing_sign" and have_ends:
        checks["positive_at_high_end"] = bool(np.all(mu[-n_limit:] > 0))
        checks["negative_at_low_end"] = bool(np.all(mu[:n_limit] < 0))
    if g.shape in ("strict_sign", "saturating", "vanishing_sign"):
        checks["has_zero_crossing"] = bool(sign_changes(mu).size > 0)
    return BranchFeatures(lo, hi, float(mu.min()), float(mu.max()), pdef,
                          zero_crossings(xi, mu), mult, checks)


# -- a-priori inequalities --------------------------------------------------


@dataclass
class AuditReport:
    margins: dict
    holds: dict

    @property
    def all_hold(self) -> bool:
        return all(self.holds.values())

    def as_dict(self) -> dict:
        return {k: {"margin": self.margins[k], "holds": self.holds[k]} for k in self.margins}


def inequality_audit(sol: PeriodicSolution, spec: ProblemSpec, rel_tol: float = 1e-12) -> AuditReport:
    """Sobolev, Wirtinger, energy and a-priori bounds evaluated on the zero-mean part U.

    Each margin is (bound - measured); an inequality holds when its margin is
    above -rel_tol times the bound's scale.
    """
    T, a, omega = spec.T, spec.phi.a, spec.omega
    n = norms(sol.U)
    sup2, l2sq, h1sq = n.sup_norm**2, n.l2_norm**2, n.h1_seminorm**2
    margins = {
        "sobolev": T / 12.0 * h1sq - sup2,
        "wirtinger": h1sq - omega**2 * l2sq,
        "energy": a * a * T - h1sq,
        "derivative_bound": sol.alpha - sol.sup_uprime,
        "derivative_domain": a - sol.alpha,
    }
    scales = {
        "sobolev": T / 12.0 * h1sq,
        "wirtinger": h1sq,
        "energy": a * a * T,
        # spectral differentiation leaves O(1e-14) noise in sup|U'| even when
        # U vanishes, so this comparison is made on the scale of a
        "derivative_bound": max(sol.alpha, a),
        "derivative_domain": a,
    }
    if a * T < math.pi * math.sqrt(3.0):
        bound = a * T / (2.0 * math.sqrt(3.0))
        margins["two_solution_sup_bound"] = bound - n.sup_norm
        scales["two_solution_sup_bound"] = bound
    holds = {k: bool(m >= -rel_tol * max(scales[k], 1e-300)) for k, m in margins.items()}
    holds["derivative_domain"] = bool(margins["derivative_domain"] > 0)
    return AuditReport(margins, holds)
