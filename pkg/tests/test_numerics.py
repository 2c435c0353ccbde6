import numpy as np
import pytest

from utils.errors import JetError, LinearAlgebraError, RootFindingError
from utils.geometry import circle
from utils.numerics import (adaptive_gauss_legendre, circle_jet, integrate, log_near_one, poly_roots,
                            series_div, series_inv, series_sqrt1p, shifted_power_poly, solve_dense,
                            taylor_shift)


def test_poly_roots_sorted_and_simple():
    coeffs = np.polynomial.polynomial.polyfromroots([2.0, 1.0, -3j])
    roots = poly_roots(coeffs)
    values = [r.value for r in roots]
    assert np.allclose(values, [-3j, 1.0, 2.0], atol=1e-10)
    assert all(r.is_simple for r in roots)


def test_poly_roots_clusters_double_root():
    roots = poly_roots(np.polynomial.polynomial.polyfromroots([1.0, 1.0, -2.0]))
    assert [r.multiplicity for r in roots] == [1, 2]
    assert abs(roots[1].value - 1.0) < 1e-6


def test_poly_roots_rejects_constants():
    with pytest.raises(RootFindingError):
        poly_roots([3.0, 0.0])


def test_adaptive_gauss_legendre_exp():
    value, err = adaptive_gauss_legendre(lambda s: np.exp(s))
    assert abs(value - (np.e - 1)) < 1e-13
    assert err < 1e-10


def test_integrate_circle_gives_two_pi_i():
    value = integrate(lambda x, sheet: 1.0 / x, circle(0j, 1.0))
    assert abs(value - 2j * np.pi) < 1e-12


def test_circle_jet_laurent_coefficients():
    jet = circle_jet(lambda t: np.exp(t) / t ** 2, 0.5, order=3, laurent=2)
    assert abs(jet.coefficient(-2) - 1.0) < 1e-12
    assert abs(jet.residue - 1.0) < 1e-12
    assert abs(jet.value - 0.5) < 1e-12
    assert abs(jet.coefficient(3) - 1.0 / 120) < 1e-12
    assert jet.coefficient(7) == 0


def test_circle_jet_flags_slow_tail():
    with pytest.raises(JetError):
        circle_jet(lambda t: 1.0 / (1.05 - t), 1.0)


def test_solve_dense_reports_condition():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    x, cond = solve_dense(a, [1.0, 2.0])
    assert np.allclose(a @ x, [1.0, 2.0])
    assert cond >= 1.0


def test_solve_dense_singular():
    with pytest.raises(LinearAlgebraError):
        solve_dense([[1.0, 2.0], [2.0, 4.0]], [1.0, 0.0])


def test_series_helpers():
    inv = series_inv([1.0, 1.0], 4)
    assert np.allclose(inv, [1, -1, 1, -1, 1])
    assert np.allclose(series_div([1.0, 2.0, 1.0], [1.0, 1.0], 3), [1, 1, 0, 0])
    assert np.allclose(series_sqrt1p(4.0, 1, 2), [1.0, 1.0 / 8, -1.0 / 128])


def test_polynomial_shifts():
    assert np.allclose(taylor_shift([0.0, 0.0, 1.0], 1.0), [1.0, 2.0, 1.0])
    assert np.allclose(shifted_power_poly(1.0, [0.0, 0.0, 1.0]), [1.0, -2.0, 1.0])


def test_log_near_one_flips_sign():
    assert abs(log_near_one(-1.0001) - np.log(1.0001)) < 1e-15


def test_circle_jet_independent_of_radius():
    f = lambda t: np.exp(t) / (2.0 - t)
    full = circle_jet(f, 0.8, order=6)
    half = circle_jet(f, 0.4, order=6)
    assert np.allclose(half.taylor(6), full.taylor(6), rtol=1e-10, atol=1e-13)
