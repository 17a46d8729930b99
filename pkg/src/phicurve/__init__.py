"""Global branches mu(xi) of periodic solutions for phi-Laplacian pendulum equations."""

from .analysis import branch_features, inequality_audit, verify_by_shooting
from .continuation import SolverSettings, newton_step, solve_at_xi, sweep_xi
from .model import Forcing, ProblemSpec, make_g, make_phi, validate_spec

__all__ = [
    "Forcing",
    "ProblemSpec",
    "SolverSettings",
    "branch_features",
    "inequality_audit",
    "make_g",
    "make_phi",
    "newton_step",
    "solve_at_xi",
    "sweep_xi",
    "validate_spec",
    "verify_by_shooting",
]
