from dataclasses import FrozenInstanceError

import mpmath
import numpy as np
import pytest

from models.curve import SurfacePoint
from utils.errors import EvaluationError


@pytest.mark.parametrize("name", ["ell4_ds", "g2_23_ds"])
def test_basis_is_a_normalized(request, name):
    ds = request.getfixturevalue(name)
    assert np.allclose(ds.a_periods(ds.basis), np.eye(ds.curve.genus), atol=1e-10)


@pytest.mark.parametrize("name", ["ell4_ds", "g2_23_ds"])
def test_period_matrix_is_riemann(request, name):
    omega = request.getfixturevalue(name).omega
    assert np.max(np.abs(omega - omega.T)) < 1e-10 * np.max(np.abs(omega))
    assert np.min(np.linalg.eigvalsh(omega.imag)) > 0


def test_theta_matches_jacobi_theta(ell4_ds):
    tau = complex(ell4_ds.omega[0, 0])
    z = 0.2 - 0.15j
    expected = complex(mpmath.jtheta(3, mpmath.pi * z, mpmath.exp(1j * mpmath.pi * tau)))
    assert abs(complex(ell4_ds.theta(np.array([z]))) - expected) < 1e-10 * abs(expected)


def test_second_kind_singular_part(g2_23_ds):
    w = g2_23_ds.second_kind(1, 0, 2)
    assert np.allclose(g2_23_ds.a_periods([w])[0], 0, atol=1e-10)
    jet = g2_23_ds.pole_laurent([w], 1, 0, window=3)
    assert abs(jet.coefficient(-2)[0] - 1.0) < 1e-8
    assert abs(jet.coefficient(-3)[0]) < 1e-8
    assert abs(jet.residue[0]) < 1e-8
    other = g2_23_ds.pole_laurent([w], 1, 1, window=3)
    assert np.max(np.abs([other.coefficient(-k)[0] for k in (1, 2, 3)])) < 1e-8


def test_second_kind_order_range(g2_23_ds):
    with pytest.raises(EvaluationError):
        g2_23_ds.second_kind(0, 0, 3)


def test_third_kind_residues(g2_23_ds):
    u = g2_23_ds.third_kind(1, 1)
    assert abs(g2_23_ds.pole_laurent([u], 1, 1).residue[0] - 1.0) < 1e-8
    assert abs(g2_23_ds.pole_laurent([u], 0, 0).residue[0] + 1.0) < 1e-8
    assert np.allclose(g2_23_ds.a_periods([u])[0], 0, atol=1e-10)


def test_third_kind_at_base_point(g2_23_ds):
    with pytest.raises(EvaluationError):
        g2_23_ds.third_kind(0, 0)


def test_values_at_branch_point_are_rejected(ell4_ds):
    e = complex(ell4_ds.curve.branch_points[0])
    with pytest.raises(EvaluationError):
        ell4_ds.point_values(ell4_ds.basis, SurfacePoint(e, 0, branch=0))


def test_v_derivative_matches_difference(surface_service, g2_23_ds):
    curve = g2_23_ds.curve
    x, h = curve.basepoint + 0.05j, 1e-5
    for sheet in (0, 1):
        phi = lambda z: surface_service.sheet_phi(curve, z, sheet)
        numeric = (phi(x + h) - phi(x - h)) / (2 * h)
        exact = g2_23_ds.v_derivative(x, surface_service.sheet_w(curve, x, sheet))
        assert abs(numeric - exact) < 1e-7 * max(1.0, abs(exact))


def test_bidifferential_symmetric(g2_23_ds):
    x, y = g2_23_ds.sample_points(2)
    assert abs(g2_23_ds.bidifferential(x, y) - g2_23_ds.bidifferential(y, x)) < 1e-9 * abs(
        g2_23_ds.bidifferential(x, y))


@pytest.mark.slow
def test_bidifferential_matches_algebraic_form(ell4_ds):
    x, y = ell4_ds.sample_points(2)
    theta_form = ell4_ds.bidifferential(x, y)
    assert abs(theta_form - ell4_ds.hyperelliptic_bidifferential(x, y)) < 1e-8 * abs(theta_form)


def test_bergman_reg_two_ways(g2_23_ds):
    x = g2_23_ds.sample_points(1)[0]
    assert abs(g2_23_ds.bergman_reg(x) - g2_23_ds.bergman_reg_limit(x)) < 1e-8 * max(
        1.0, abs(g2_23_ds.bergman_reg(x)))


def test_flat_residue_series_and_quadrature(g2_23_ds):
    h = g2_23_ds.basis[1]
    for index, zero in enumerate(g2_23_ds.curve.zeros):
        if zero.kind == 'regular':
            series = g2_23_ds.flat_residue(h, index)
            assert abs(series - g2_23_ds.flat_residue_by_quadrature(h, index)) < 1e-8 * max(1.0, abs(series))


def test_branch_jets(ell4_ds):
    jets = ell4_ds.branch_jets
    assert len(jets) == 4
    for jet in jets:
        assert abs(jet.a) > 0
        assert jet.g.shape == (1, ell4_ds.config.JET_ORDER + 1)
    cross = ell4_ds.branch_cross_values
    assert np.allclose(cross, cross.T)
    assert np.all(np.diag(cross) == 0)


def test_branch_offset_rejects_points_inside_jet_circle(ell4_ds):
    chart = ell4_ds.branch_chart(0)
    inside = SurfacePoint(complex(chart.center + 0.5 * chart.radius ** 2), 0)
    with pytest.raises(EvaluationError):
        ell4_ds.branch_offset(inside, 0)


def test_prime_form_near_diagonal(g2_23_ds):
    x = g2_23_ds.sample_points(1)[0]
    y = SurfacePoint(x.x + 1e-3, x.sheet)
    assert abs(abs(g2_23_ds.prime_form(x, y)) / 1e-3 - 1.0) < 1e-4


def test_abel_difference_is_antisymmetric(g2_23_ds):
    x, y = g2_23_ds.sample_points(2)
    assert np.array_equal(g2_23_ds.abel_difference(y, x), -g2_23_ds.abel_difference(x, y))


def test_prime_form_is_antisymmetric(g2_23_ds):
    points = g2_23_ds.sample_points(4)
    for i, x in enumerate(points):
        for y in points[i + 1:]:
            forward = g2_23_ds.prime_form(x, y)
            assert abs(forward + g2_23_ds.prime_form(y, x)) < 1e-9 * abs(forward)


def test_half_density_squares_to_h_delta(g2_23_ds):
    grad = g2_23_ds.primary_characteristic[1]
    for point in g2_23_ds.sample_points(3):
        h = g2_23_ds.half_density(point)
        squared = g2_23_ds.half_density_squared(g2_23_ds.point_values(g2_23_ds.basis, point), grad)
        assert abs(h ** 2 - squared) < 1e-12 * abs(squared)
        assert g2_23_ds.half_density(point) == h


def test_half_density_is_continuous_along_a_short_step(g2_23_ds):
    x = g2_23_ds.sample_points(1)[0]
    near = SurfacePoint(x.x + 1e-4, x.sheet)
    h, h_near = g2_23_ds.half_density(x), g2_23_ds.half_density(near)
    assert abs(h_near - h) < 1e-2 * abs(h)


def test_half_density_rejects_branch_points(ell4_ds):
    e = complex(ell4_ds.curve.branch_points[0])
    with pytest.raises(EvaluationError):
        ell4_ds.half_density(SurfacePoint(e, 0, branch=0))


def test_mixed_log_derivative_of_prime_form_is_bidifferential(g2_23_ds):
    x, y = g2_23_ds.sample_points(2)
    B = g2_23_ds.bidifferential(x, y)
    assert abs(g2_23_ds.prime_form_cross_derivative(x, y) - B) < 1e-4 * abs(B)


@pytest.mark.parametrize("pole_index, sheet, order", [(0, 0, 2), (0, 1, 2), (1, 0, 2), (1, 1, 3)])
def test_second_kind_b_periods_from_bilinear_relation(g2_23_ds, pole_index, sheet, order):
    w = g2_23_ds.second_kind(pole_index, sheet, order)
    b_periods = g2_23_ds.cycle_integrals([w])[1][0]
    expected = g2_23_ds.second_kind_b_periods(pole_index, sheet, order)
    assert np.max(np.abs(b_periods - expected)) < 1e-8 * np.max(np.abs(expected))


@pytest.mark.parametrize("pole_index, sheet", [(0, 1), (1, 0), (1, 1)])
def test_third_kind_b_periods_are_abel_differences(g2_23_ds, pole_index, sheet):
    assert np.max(np.abs(g2_23_ds.third_kind_abel_defect(pole_index, sheet))) < 1e-8


def test_second_kind_reciprocity(g2_23_ds):
    first, other = (0, 1), (1, 0)
    w_first = g2_23_ds.second_kind(*first, 2)
    w_other = g2_23_ds.second_kind(*other, 2)
    at_other = g2_23_ds.pole_laurent([w_first], *other).value[0]
    at_first = g2_23_ds.pole_laurent([w_other], *first).value[0]
    assert abs(at_other - at_first) < 1e-8 * abs(at_first)


@pytest.mark.parametrize("index", [0, 2])
def test_branch_jets_stable_under_radius_halving(ell4_ds, index):
    half, full = ell4_ds.branch_jet_stability(index)
    assert np.max(np.abs(half - full)) < 1e-8 * np.max(np.abs(full))


def test_branch_value_matches_circle_quadrature(ell4_ds):
    for index, jet in enumerate(ell4_ds.branch_jets):
        assert np.allclose(ell4_ds.branch_value_by_quadrature(index), jet.values, rtol=1e-8, atol=0)


def test_direction_jets_leave_branch_jets_untouched(ell4_ds):
    h = ell4_ds.basis[0]
    jet = ell4_ds.branch_jets[1]
    first = ell4_ds.direction_jet(h, 1)
    assert ell4_ds.direction_jet(h, 1) is first
    assert not hasattr(jet, "directions")
    with pytest.raises(FrozenInstanceError):
        jet.projective = 0j
