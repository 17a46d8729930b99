"""T-periodic functions sampled on a uniform grid.

Interpolation and differentiation are trigonometric (FFT based); quadrature
is the trapezoid rule, which is spectrally accurate for smooth periodic data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    T: float
    N: int

    def __post_init__(self):
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be a positive even integer")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N) * (self.T / self.N)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.N // 2 + 1)


class PeriodicFunction:
    """Samples of a T-periodic function at the nodes t_j = j T / N."""

    __slots__ = ("grid", "samples")

    def __init__(self, grid: PeriodicGrid, samples):
        samples = np.array(samples, dtype=float)
        if samples.shape != (grid.N,):
            raise ValueError(f"expected {grid.N} samples, got shape {samples.shape}")
        samples.setflags(write=False)
        self.grid = grid
        self.samples = samples

    @classmethod
    def from_callable(cls, grid: PeriodicGrid, fn) -> "PeriodicFunction":
        return cls(grid, np.broadcast_to(fn(grid.nodes), (grid.N,)))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "PeriodicFunction":
        return cls(grid, np.full(grid.N, float(value)))

    def __repr__(self):
        return f"PeriodicFunction(T={self.grid.T}, N={self.grid.N})"

    # arithmetic on a shared grid
    def _other(self, other):
        if isinstance(other, PeriodicFunction):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return other.samples
        return other

    def __add__(self, other):
        return PeriodicFunction(self.grid, self.samples + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return PeriodicFunction(self.grid, self.samples - self._other(other))

    def __mul__(self, other):
        return PeriodicFunction(self.grid, self.samples * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicFunction(self.grid, -self.samples)

    def coefficients(self) -> np.ndarray:
        return np.fft.rfft(self.samples)

    def __call__(self, t):
        return TrigInterpolant([self])(t)[0]

    def refine(self, M: int) -> np.ndarray:
        """Values of the interpolant on the uniform mesh of M >= N points."""
        N = self.grid.N
        if M < N:
            raise ValueError("refinement must not coarsen")
        c = self.coefficients()
        c[-1] *= 0.5  # split Nyquist so zero padding keeps the cosine mode real
        return np.fft.irfft(c, M) * (M / N)


def mean(f: PeriodicFunction) -> float:
    return math.fsum(f.samples) / f.grid.N


def integral(f: PeriodicFunction) -> float:
    return math.fsum(f.samples) * f.grid.T / f.grid.N


def derivative(f: PeriodicFunction, order: int = 1) -> PeriodicFunction:
    """Spectral derivative; the Nyquist mode is dropped for odd orders."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    grid = f.grid
    ik = 1j * grid.omega * grid.wavenumbers
    c = f.coefficients() * ik**order
    if order % 2:
        c[-1] = 0.0
    return PeriodicFunction(grid, np.fft.irfft(c, grid.N))


def antiderivative(f: PeriodicFunction) -> PeriodicFunction:
    """Zero-mean spectral antiderivative of the mean-free part of f."""
    grid = f.grid
    c = f.coefficients()
    k = grid.wavenumbers
    out = np.zeros_like(c)
    out[1:] = c[1:] / (1j * grid.omega * k[1:])
    out[-1] = 0.0
    return PeriodicFunction(grid, np.fft.irfft(out, grid.N))


@dataclass(frozen=True)
class Norms:
    sup_norm: float
    l2_norm: float
    h1_seminorm: float


def norms(f: PeriodicFunction, refine: int = 8) -> Norms:
    """sup on a refined mesh; L2 and H1-seminorm (int f'^2)^(1/2)."""
    sup = float(np.max(np.abs(f.refine(refine * f.grid.N))))
    l2 = math.sqrt(integral(f * f))
    df = derivative(f, 1)
    h1 = math.sqrt(integral(df * df))
    return Norms(sup, l2, h1)


class TrigInterpolant:
    """Joint evaluator for several periodic functions on one grid.

    Used inside ODE right-hand sides, where the same coefficient functions
    are needed at many scattered times.
    """

    def __init__(self, functions):
        functions = list(functions)
        grid = functions[0].grid
        if any(fn.grid != grid for fn in functions):
            raise ValueError("grid mismatch")
        N = grid.N
        C = np.array([fn.coefficients() for fn in functions]) / N
        C[:, 1:-1] *= 2.0
        self.grid = grid
        self._C = C
        self._k = grid.wavenumbers * grid.omega

    def __call__(self, t):
        """Evaluate all functions at time(s) t; result shape (nfun,) + shape(t)."""
        t = np.asarray(t, dtype=float)
        phase = np.exp(1j * np.multiply.outer(t, self._k))
        return np.real(np.tensordot(self._C, phase, axes=([1], [-1])))

    def on_shifted_grid(self, offset: float) -> np.ndarray:
        """Values at nodes + offset, shape (nfun, N), via one inverse FFT."""
        N = self.grid.N
        c = self._C * np.exp(1j * self._k * offset)
        c[:, 1:-1] *= 0.5
        c[:, -1] = c[:, -1].real  # the Nyquist term of the interpolant is Re(c e^{ikt})
        return np.fft.irfft(c * N, N)


def to_csv_rows(t: np.ndarray, *columns: np.ndarray):
    for row in zip(t, *columns):
        yield ",".join(format_float(v) for v in row)


def format_float(v: float) -> str:
    return f"{float(v):.15g}"
