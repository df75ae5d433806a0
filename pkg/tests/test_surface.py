import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import i0

from todafill.errors import NonFiniteInput, ShapeMismatch
from todafill.surface import (
    ScalarField2,
    TorusGrid,
    fourier_field,
    integrate,
    laplacian,
    mean,
    normalize_boundary,
)

PI = math.pi


def field(grid, fn):
    X, Y = grid.coords()
    return ScalarField2(grid, fn(X, Y))


def test_grid_basics():
    g = TorusGrid(8, 4)
    assert g.shape == (8, 4)
    assert g.area == pytest.approx(4 * PI**2)
    X, Y = g.coords()
    assert X[1, 0] == pytest.approx(2 * PI / 8) and Y[0, 1] == pytest.approx(2 * PI / 4)
    with pytest.raises(ValueError):
        TorusGrid(0, 4)


def test_field_validation():
    g = TorusGrid(4, 4)
    with pytest.raises(ShapeMismatch):
        ScalarField2(g, np.zeros((4, 5)))
    with pytest.raises(NonFiniteInput):
        ScalarField2(g, np.full((4, 4), np.nan))
    f = ScalarField2(g, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_laplacian_constant():
    g = TorusGrid(16, 12)
    assert np.all(laplacian(ScalarField2(g, np.full(g.shape, 3.7))).values == 0.0)


def test_laplacian_cos():
    g = TorusGrid(256, 8)
    err = np.max(np.abs(laplacian(field(g, lambda x, y: np.cos(x))).values + np.cos(g.coords()[0])))
    assert err < 1e-4


def test_laplacian_second_order():
    fn = lambda x, y: np.cos(x) + np.sin(2 * y)
    exact = lambda x, y: -np.cos(x) - 4 * np.sin(2 * y)
    errs = []
    for n in (16, 32, 64):
        g = TorusGrid(n, n)
        errs.append(np.max(np.abs(laplacian(field(g, fn)).values - exact(*g.coords()))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_eigenvalues_match_stencil():
    g = TorusGrid(10, 6)
    X, Y = g.coords()
    f = field(g, lambda x, y: np.cos(3 * x + 2 * y))
    lam = g.eigenvalues()[3, 2]
    np.testing.assert_allclose(laplacian(f).values, lam * f.values, atol=1e-12)


@pytest.mark.parametrize(
    "fn, exact",
    [
        (lambda x, y: np.ones_like(x), 4 * PI**2),
        (lambda x, y: np.cos(x), 0.0),
        (lambda x, y: np.cos(x) ** 2, 2 * PI**2),
    ],
)
def test_integrate(fn, exact):
    assert integrate(field(TorusGrid(32, 16), fn)) == pytest.approx(exact, abs=1e-10)


def test_mean_of_constant():
    assert mean(ScalarField2(TorusGrid(5, 7), np.full((5, 7), 2.5))) == pytest.approx(2.5)


def test_normalize_constant_shift():
    g = TorusGrid(8, 8)
    zero = ScalarField2(g, np.zeros(g.shape))
    assert np.allclose(normalize_boundary(zero, 4 * PI**2).phi.values, 0.0, atol=1e-15)
    np.testing.assert_allclose(normalize_boundary(zero, 8 * PI**2).phi.values, math.log(2), rtol=1e-15)


def test_normalize_bessel():
    g = TorusGrid(32, 4)
    raw = field(g, lambda x, y: 0.3 * np.cos(x))
    d = normalize_boundary(raw, 4 * PI**2)
    c = d.phi.values - raw.values
    assert np.ptp(c) < 1e-15
    # the trapezoid rule is spectrally accurate for periodic analytic integrands
    assert c[0, 0] == pytest.approx(-math.log(i0(0.3)), abs=1e-12)
    assert integrate(np.exp(d.phi.values), g) == pytest.approx(4 * PI**2, rel=1e-12)


def test_normalize_rejects_bad_area():
    g = TorusGrid(4, 4)
    with pytest.raises(ValueError):
        normalize_boundary(ScalarField2(g, np.zeros(g.shape)), -1.0)


@settings(max_examples=60, deadline=None)
@given(
    v=arrays(np.float64, (6, 5), elements=st.floats(-30, 30)),
    a=st.floats(1e-3, 1e3),
)
def test_normalize_hits_target(v, a):
    g = TorusGrid(6, 5)
    d = normalize_boundary(ScalarField2(g, v), a)
    assert integrate(np.exp(d.phi.values), g) == pytest.approx(a, rel=1e-12)
    shift = d.phi.values - v
    assert np.ptp(shift) <= 1e-12 * max(1.0, np.max(np.abs(shift)))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (6, 8), elements=st.floats(-5, 5)))
def test_laplacian_integrates_to_zero(v):
    g = TorusGrid(6, 8)
    assert abs(integrate(laplacian(ScalarField2(g, v)))) < 1e-9


def test_fourier_field():
    g = TorusGrid(8, 8)
    f = fourier_field(g, [(1, 0, 0.3, "cos"), (0, 1, 0.2, "sin")], const=1.0)
    X, Y = g.coords()
    np.testing.assert_allclose(f.values, 1.0 + 0.3 * np.cos(X) + 0.2 * np.sin(Y), atol=1e-15)
