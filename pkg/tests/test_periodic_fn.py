import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phicurve.periodic_fn import (
    PeriodicFunction,
    PeriodicGrid,
    TrigInterpolant,
    antiderivative,
    derivative,
    mean,
    norms,
)


@pytest.fixture
def grid():
    return PeriodicGrid(1.0, 64)


def test_nodes(grid):
    t = grid.nodes
    assert np.all(np.diff(t) > 0)
    np.testing.assert_allclose(np.diff(t), grid.T / grid.N, rtol=1e-13)


def test_mean(grid):
    w = grid.omega
    assert abs(mean(PeriodicFunction.from_callable(grid, lambda t: np.sin(w * t)))) < 1e-14
    assert mean(PeriodicFunction.constant(grid, 3.7)) == 3.7
    assert mean(PeriodicFunction.from_callable(grid, lambda t: np.sin(w * t) ** 2)) == pytest.approx(0.5, abs=1e-12)


def test_interpolant_reproduces_nodes_and_is_periodic():
    grid = PeriodicGrid(2.5, 32)
    rng = np.random.default_rng(0)
    f = PeriodicFunction(grid, rng.normal(size=32))
    np.testing.assert_allclose(f(grid.nodes), f.samples, atol=1e-12)
    t = rng.uniform(0, 2.5, 50)
    np.testing.assert_allclose(f(t + grid.T), f(t), atol=1e-12)


def test_shifted_grid_matches_pointwise_evaluation():
    grid = PeriodicGrid(0.3, 16)
    rng = np.random.default_rng(1)
    fs = [PeriodicFunction(grid, rng.normal(size=16)) for _ in range(3)]
    ti = TrigInterpolant(fs)
    off = 0.37 * grid.T / grid.N
    np.testing.assert_allclose(ti.on_shifted_grid(off), ti(grid.nodes + off), atol=1e-12)


def test_refine_matches_interpolant():
    grid = PeriodicGrid(1.0, 16)
    f = PeriodicFunction(grid, np.random.default_rng(2).normal(size=16))
    fine = f.refine(128)
    np.testing.assert_allclose(fine, f(np.arange(128) / 128), atol=1e-12)


def test_derivatives(grid):
    w = grid.omega
    s = PeriodicFunction.from_callable(grid, lambda t: np.sin(w * t))
    c = PeriodicFunction.from_callable(grid, lambda t: np.cos(w * t))
    assert np.max(np.abs(derivative(s, 1).samples - w * c.samples)) < 1e-10
    assert np.max(np.abs(derivative(c, 2).samples + w * w * c.samples)) < 1e-9
    assert np.max(np.abs(derivative(PeriodicFunction.constant(grid, 2.0), 1).samples)) == 0.0


def test_norms_of_sine():
    grid = PeriodicGrid(1.0, 64)
    w = grid.omega
    n = norms(PeriodicFunction.from_callable(grid, lambda t: np.sin(w * t)))
    assert n.sup_norm == pytest.approx(1.0, abs=1e-8)
    assert n.l2_norm**2 == pytest.approx(0.5, abs=1e-8)
    assert n.h1_seminorm**2 == pytest.approx(w * w / 2, abs=1e-8)
    # Sobolev: 1 <= (1/12)(4 pi^2 / 2)
    assert n.sup_norm**2 <= grid.T / 12 * n.h1_seminorm**2
    assert grid.T / 12 * n.h1_seminorm**2 == pytest.approx(1.645, abs=1e-3)


def test_norms_of_zero(grid):
    n = norms(PeriodicFunction.constant(grid, 0.0))
    assert n.sup_norm == n.l2_norm == n.h1_seminorm == 0.0


def band_limited(draw_coeffs, T, N, kmax):
    grid = PeriodicGrid(T, N)
    a, b = draw_coeffs
    t = grid.nodes
    w = grid.omega
    vals = sum(a[k - 1] * np.cos(k * w * t) + b[k - 1] * np.sin(k * w * t) for k in range(1, kmax + 1))
    return PeriodicFunction(grid, vals)


coeffs = st.lists(st.floats(-1, 1), min_size=6, max_size=6)


@settings(max_examples=60, deadline=None)
@given(a=coeffs, b=coeffs, T=st.floats(0.1, 10.0))
def test_wirtinger_and_sobolev(a, b, T):
    f = band_limited((a, b), T, 64, 6)
    n = norms(f)
    w = 2 * math.pi / T
    scale = max(n.h1_seminorm**2, 1e-300)
    assert n.h1_seminorm**2 >= w * w * n.l2_norm**2 - 1e-10 * scale
    assert n.sup_norm**2 <= T / 12 * n.h1_seminorm**2 + 1e-10 * scale
    assert abs(mean(derivative(f, 1))) < 1e-12 * max(1.0, scale)


@settings(max_examples=30, deadline=None)
@given(a1=st.floats(-1, 1), b1=st.floats(-1, 1), T=st.floats(0.1, 10.0))
def test_wirtinger_equality_for_first_harmonic(a1, b1, T):
    f = band_limited(([a1] + [0] * 5, [b1] + [0] * 5), T, 32, 6)
    n = norms(f)
    w = 2 * math.pi / T
    assert n.h1_seminorm**2 - w * w * n.l2_norm**2 == pytest.approx(0.0, abs=1e-10 * max(1.0, n.h1_seminorm**2))


@settings(max_examples=30, deadline=None)
@given(a=coeffs, b=coeffs)
def test_wirtinger_strict_with_higher_harmonics(a, b):
    b = list(b)
    b[2] = 0.5  # third harmonic present
    f = band_limited((a, b), 1.0, 64, 6)
    n = norms(f)
    assert n.h1_seminorm**2 - (2 * math.pi) ** 2 * n.l2_norm**2 > 1e-3


@settings(max_examples=30, deadline=None)
@given(a=coeffs, b=coeffs, T=st.floats(0.1, 10.0))
def test_antiderivative_round_trip(a, b, T):
    f = band_limited((a, b), T, 64, 6)
    back = derivative(antiderivative(f), 1)
    np.testing.assert_allclose(back.samples, f.samples, atol=1e-10)
