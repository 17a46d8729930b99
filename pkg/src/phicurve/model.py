"""Problem definition for periodic solutions of phi-Laplacian pendulum equations.

The equation is

    (phi(u'))' + lam * u' + k * g(u) = mu + e(t),    u, u' T-periodic,

with phi an increasing homeomorphism of (-a, a) onto the real line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ConfigurationError(ValueError):
    """Unknown catalog key or inconsistent problem parameters."""


class ForcingMeanError(ValueError):
    """The forcing term does not have zero average over a period."""


ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhiFunction:
    """The homeomorphism phi: (-a, a) -> R with derivatives and inverse.

    ``min_slope`` is the infimum of ``dphi`` over the domain, stored
    analytically by each catalog entry.
    """

    name: str
    half_width: float
    phi: ArrayFn
    dphi: ArrayFn
    d2phi: ArrayFn
    psi: ArrayFn
    min_slope: float

    @property
    def a(self) -> float:
        return self.half_width

    @property
    def a0(self) -> float:
        return self.min_slope


@dataclass(frozen=True)
class Nonlinearity:
    """The restoring term g with its derivative and global slope bound.

    ``shape`` is one of ``periodic``, ``saturating``, ``vanishing_sign``,
    ``strict_sign`` or ``other``; ``period`` and ``limits`` are filled in
    for the periodic and saturating shapes respectively.
    """

    name: str
    g: ArrayFn
    dg: ArrayFn
    slope_bound: float
    shape: str
    period: float | None = None
    limits: tuple[float, float] | None = None


@dataclass(frozen=True)
class Forcing:
    """Zero-mean T-periodic forcing given as a finite trigonometric sum.

    ``terms`` holds ``(harmonic, sin_amp, cos_amp)`` triples, so
    e(t) = sum sin_amp * sin(n w t) + cos_amp * cos(n w t). A harmonic of
    zero is rejected since it would carry a mean.
    """

    terms: tuple[tuple[int, float, float], ...] = ()
    description: str = ""

    def __post_init__(self):
        for n, _, _ in self.terms:
            if int(n) != n or n < 1:
                raise ConfigurationError(f"forcing harmonic must be a positive integer, got {n}")

    @classmethod
    def single(cls, kind: str, amplitude: float) -> "Forcing":
        if kind == "sin":
            return cls(((1, float(amplitude), 0.0),), f"{amplitude}*sin(wt)")
        if kind == "cos":
            return cls(((1, 0.0, float(amplitude)),), f"{amplitude}*cos(wt)")
        raise ConfigurationError(f"unknown forcing kind {kind!r}")

    def __call__(self, t, omega: float):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for n, s, c in self.terms:
            out = out + s * np.sin(n * omega * t) + c * np.cos(n * omega * t)
        return out

    def antiderivative(self, t, omega: float):
        """int_0^t e(s) ds in closed form."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for n, s, c in self.terms:
            nw = n * omega
            out = out + s * (1.0 - np.cos(nw * t)) / nw + c * np.sin(nw * t) / nw
        return out

    @property
    def is_zero(self) -> bool:
        return all(s == 0.0 and c == 0.0 for _, s, c in self.terms)


@dataclass(frozen=True)
class ProblemSpec:
    phi: PhiFunction
    g: Nonlinearity
    lam: float
    k: float
    T: float
    e: Forcing = field(default_factory=Forcing)
    N: int = 256

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigurationError("friction lambda must be nonnegative")
        if self.k <= 0:
            raise ConfigurationError("k must be positive")
        if self.T <= 0:
            raise ConfigurationError("period T must be positive")
        if self.N < 4 or self.N % 2:
            raise ConfigurationError("grid size N must be an even integer >= 4")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T

    @property
    def uniqueness_condition_holds(self) -> bool:
        return self.k * self.g.slope_bound < self.phi.a0 * self.omega

    def forcing(self, t):
        return self.e(t, self.omega)

    def with_grid(self, N: int) -> "ProblemSpec":
        return ProblemSpec(self.phi, self.g, self.lam, self.k, self.T, self.e, N)


# -- catalogs ---------------------------------------------------------------


def _relativistic() -> PhiFunction:
    def phi(z):
        z = np.asarray(z, dtype=float)
        return z / np.sqrt((1.0 - z) * (1.0 + z))

    def dphi(z):
        z = np.asarray(z, dtype=float)
        return ((1.0 - z) * (1.0 + z)) ** -1.5

    def d2phi(z):
        z = np.asarray(z, dtype=float)
        return 3.0 * z * ((1.0 - z) * (1.0 + z)) ** -2.5

    def psi(w):
        w = np.asarray(w, dtype=float)
        return w / np.sqrt(1.0 + w * w)

    return PhiFunction("relativistic", 1.0, phi, dphi, d2phi, psi, 1.0)


_PHI_CATALOG = {"relativistic": _relativistic}


def make_phi(name: str) -> PhiFunction:
    try:
        return _PHI_CATALOG[name]()
    except KeyError:
        raise ConfigurationError(f"unknown phi {name!r}; known: {sorted(_PHI_CATALOG)}") from None


def _sin() -> Nonlinearity:
    return Nonlinearity("sin", np.sin, np.cos, 1.0, "periodic", period=2.0 * math.pi)


def _atan() -> Nonlinearity:
    def dg(u):
        u = np.asarray(u, dtype=float)
        return 1.0 / (1.0 + u * u)

    return Nonlinearity("atan", np.arctan, dg, 1.0, "saturating", limits=(-math.pi / 2, math.pi / 2))


def _rational3() -> Nonlinearity:
    def g(u):
        u = np.asarray(u, dtype=float)
        return 3.0 * u / (1.0 + u * u)

    def dg(u):
        u = np.asarray(u, dtype=float)
        return 3.0 * (1.0 - u * u) / (1.0 + u * u) ** 2

    # sup |g'| is attained at u = 0
    return Nonlinearity("rational3", g, dg, 3.0, "vanishing_sign")


_G_CATALOG = {"sin": _sin, "atan": _atan, "rational3": _rational3}


def make_g(name: str) -> Nonlinearity:
    try:
        return _G_CATALOG[name]()
    except KeyError:
        raise ConfigurationError(f"unknown g {name!r}; known: {sorted(_G_CATALOG)}") from None


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    forcing_mean: float
    uniqueness_regime: bool
    slope_product: float
    slope_threshold: float
    literal_unit_slope: bool
    two_solution_applicable: bool
    two_solution_hypotheses: bool
    two_solution_mu_window: float | None
    warnings: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "forcing_mean": self.forcing_mean,
            "uniqueness_regime": self.uniqueness_regime,
            "kG": self.slope_product,
            "a0_omega": self.slope_threshold,
            "literal_unit_slope_bound": self.literal_unit_slope,
            "two_solution_applicable": self.two_solution_applicable,
            "two_solution_hypotheses_hold": self.two_solution_hypotheses,
            "two_solution_mu_window": self.two_solution_mu_window,
            "warnings": list(self.warnings),
        }


MEAN_TOL = 1e-10


def validate_spec(spec: ProblemSpec, n_quad: int = 4096) -> ValidationReport:
    """Check the structural hypotheses of a problem instance.

    Raises ForcingMeanError if e(t) has nonzero average. Failure of the
    uniqueness condition k*G < a0*omega only produces a warning.
    """
    t = np.arange(n_quad) * spec.T / n_quad
    e_mean = float(np.mean(spec.forcing(t)))
    if abs(e_mean) > MEAN_TOL:
        raise ForcingMeanError(f"forcing has mean {e_mean:.3e}, expected 0")

    kG = spec.k * spec.g.slope_bound
    thr = spec.phi.a0 * spec.omega
    warnings = []
    unique = kG < thr
    if not unique:
        warnings.append(
            f"k*G = {kG:.6g} >= a0*omega = {thr:.6g}: branch uniqueness and continuation are not guaranteed"
        )

    aT = spec.phi.a * spec.T
    applicable = spec.g.name == "sin"
    hyp = aT < math.pi * math.sqrt(3.0)
    window = spec.k * math.cos(aT / (2.0 * math.sqrt(3.0))) if hyp else None
    return ValidationReport(
        forcing_mean=e_mean,
        uniqueness_regime=unique,
        slope_product=kG,
        slope_threshold=thr,
        literal_unit_slope=spec.g.slope_bound <= 1.0,
        two_solution_applicable=applicable,
        two_solution_hypotheses=hyp,
        two_solution_mu_window=window,
        warnings=tuple(warnings),
    )
