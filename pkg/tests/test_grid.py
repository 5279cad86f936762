import numpy as np
import pytest

from pmecontract.admissible import ParameterError
from pmecontract.grid import (ScalarField, TorusGrid, gradient, hessian, integrate,
                              integrate_lp, laplacian, shift)


def _err_order(fn):
    errs = [fn(N) for N in (32, 64, 128, 256)]
    return [np.log2(a / b) for a, b in zip(errs, errs[1:])]


def test_grid_validation():
    with pytest.raises(ParameterError):
        TorusGrid(3, 16)
    with pytest.raises(ParameterError):
        TorusGrid(1, 4)
    with pytest.raises(ParameterError):
        TorusGrid(1, 16, -1.0)
    g = TorusGrid(2, 16, 4.0)
    assert g.h == 0.25 and g.shape == (16, 16) and g.cell_volume == 0.0625 and g.size == 256
    with pytest.raises(ParameterError):
        ScalarField(g, np.zeros(16))
    with pytest.raises(ParameterError):
        ScalarField(TorusGrid(1, 8), np.full(8, np.nan))


def test_constant_field_derivatives_vanish():
    for d in (1, 2):
        f = TorusGrid(d, 16).field(np.full((16,) * d, 3.0))
        assert np.all(gradient(f) == 0)
        assert np.all(laplacian(f).values == 0)
        assert np.all(hessian(f) == 0)


def test_gradient_second_order():
    L = 3.0

    def err(N):
        g = TorusGrid(1, N, L)
        x = g.axis()
        k = 2 * np.pi / L
        return np.abs(gradient(g.field(np.sin(k * x)))[0] - k * np.cos(k * x)).max()

    assert all(abs(o - 2.0) < 0.05 for o in _err_order(err))
    assert err(256) < 1e-3


def test_laplacian_second_order_and_sums_to_zero(rng):
    L = 5.0

    def err(N):
        g = TorusGrid(1, N, L)
        k = 2 * np.pi / L
        f = np.sin(k * g.axis())
        return np.abs(laplacian(g.field(f)).values + k * k * f).max()

    assert all(abs(o - 2.0) < 0.05 for o in _err_order(err))
    g = TorusGrid(2, 32)
    f = g.field(rng.normal(size=g.shape))
    assert abs(laplacian(f).values.sum()) < 1e-9 * np.abs(laplacian(f).values).max()


def test_hessian_accuracy_symmetry_trace():
    def err(N):
        g = TorusGrid(2, N)
        x, y = g.coords()
        f = g.field(np.cos(x) * np.sin(2 * y))
        H = hessian(f)
        exact_xy = -2 * np.sin(x) * np.cos(2 * y)
        return max(np.abs(H[0, 0] + np.cos(x) * np.sin(2 * y)).max(),
                   np.abs(H[0, 1] - exact_xy).max())

    assert all(abs(o - 2.0) < 0.1 for o in _err_order(err))
    g = TorusGrid(2, 16)
    x, y = g.coords()
    f = g.field(np.exp(np.sin(x) + np.cos(y)))
    H = hessian(f)
    assert np.array_equal(H[0, 1], H[1, 0])
    assert np.array_equal(H[0, 0] + H[1, 1], laplacian(f).values)


def test_integrate_lp_examples():
    g = TorusGrid(2, 16, 3.0)
    f = g.field(np.full(g.shape, 2.0))
    assert integrate_lp(f, 3.0) == pytest.approx(8.0 * 9.0, rel=1e-14)
    assert integrate_lp(f, 2.0, mask=np.zeros(g.shape, bool)) == 0.0
    g1 = TorusGrid(1, 256)
    s = g1.field(np.sin(g1.axis()))
    assert integrate_lp(s, 2.0) == pytest.approx(np.pi, abs=1e-6)
    assert integrate(s) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ParameterError):
        integrate_lp(s, 0.5)


def test_shift_properties(rng):
    g = TorusGrid(2, 16)
    f = g.field(rng.normal(size=g.shape))
    assert np.array_equal(shift(f, (0, 0)).values, f.values)
    assert np.array_equal(shift(f, (16, 0)).values, f.values)
    assert integrate_lp(shift(f, (3, -5))) == pytest.approx(integrate_lp(f), rel=1e-14)
    # g(x) = f(x + h e_1)
    assert shift(f, (1, 0)).values[0, 0] == f.values[1, 0]
    with pytest.raises(ParameterError):
        shift(f, (0.5, 0))
    with pytest.raises(ParameterError):
        shift(f, (1,))


def test_shift_equivariance(rng):
    g = TorusGrid(2, 16)
    f = g.field(rng.normal(size=g.shape))
    lhs = gradient(shift(f, (2, 3)))
    rhs = np.stack([shift(g.field(c), (2, 3)).values for c in gradient(f)])
    assert np.array_equal(lhs, rhs)
