import numpy as np
import pytest

from models.moduli import CoordinateDirection, ModuliPoint
from services.moduli_service import ModuliService, scaled_spec
from utils.errors import NavigationError


def test_coordinate_names_round_trip():
    for name in ("A0", "A3", "C0.1.1", "C2.0.4"):
        assert CoordinateDirection.parse(name).name == name
    assert CoordinateDirection.parse("C0.0.1").is_dependent
    with pytest.raises(ValueError):
        CoordinateDirection.parse("B1")


@pytest.mark.parametrize("name", ["ell4", "g2_23"])
def test_directions_count_equals_dimension(request, moduli_service, name):
    curve = request.getfixturevalue(name)
    directions = moduli_service.directions(curve)
    assert len(directions) == curve.counts.dim
    assert not any(d.is_dependent for d in directions)
    assert [d.kind for d in directions[:curve.genus]] == ['A'] * curve.genus


def test_coordinates_satisfy_residue_theorem(moduli_service, g2_23, g2_23_ds):
    coords = moduli_service.coordinates_of(g2_23, g2_23_ds)
    assert len(coords) == g2_23.counts.dim
    assert abs(coords.residue_sum()) < 1e-10 * max(1.0, float(np.max(np.abs(coords.values))))


def test_moduli_point_helpers():
    directions = (CoordinateDirection('A', index=0), CoordinateDirection.parse("C0.1.1"))
    point = ModuliPoint(directions, np.array([1.0, 2.0j]), dependent=-2.0j)
    assert point.residue_sum() == 0
    moved = point.shifted(directions[1], 1.0)
    assert moved.value_of(directions[1]) == 1.0 + 2.0j
    assert point.value_of(directions[1]) == 2.0j
    assert point.scaled(2.0).dependent == -4.0j
    assert point.as_dict()["A0"] == [1.0, 0.0]


def test_jacobian_is_square_and_invertible(moduli_service, g2_23, g2_23_ds):
    jac = moduli_service.jacobian(g2_23, g2_23_ds)
    assert jac.matrix.shape == (g2_23.counts.dim, g2_23.counts.dim)
    assert len(jac.unknowns) == g2_23.counts.dim
    assert np.isfinite(jac.condition)


def test_flatten_round_trip(moduli_service, g2_23):
    values = moduli_service.flatten(g2_23.spec)
    restored = moduli_service.unflatten(g2_23.spec, values)
    for original, back in zip(g2_23.spec.numerators, restored):
        assert np.array_equal(np.asarray(original, dtype=complex), back)


def test_coefficient_tangent_rejects_unknown_coefficient(moduli_service, g2_23):
    with pytest.raises(NavigationError):
        moduli_service.coefficient_tangent(g2_23, 3, 0)
    with pytest.raises(NavigationError):
        moduli_service.coefficient_tangent(g2_23, 1, 40)


def test_coefficient_tangent_needs_two_sheets(moduli_service, n3_smoke):
    with pytest.raises(NavigationError):
        moduli_service.coefficient_tangent(n3_smoke, 1, 0)


def test_zero_step_returns_same_curve(moduli_service, g2_23, g2_23_ds):
    coords = moduli_service.base_coordinates(g2_23, g2_23_ds)
    assert moduli_service.step_to(g2_23, coords) is g2_23


def test_scaling_multiplies_coordinates(moduli_service, surface_service, ell4, ell4_ds):
    factor = 1.7
    scaled = surface_service.build_surface(scaled_spec(ell4.spec, factor), reference=ell4)
    scaled_ds = moduli_service.differentials_for(scaled, ell4_ds)
    moved = moduli_service.coordinates_of(scaled, scaled_ds).values
    base = moduli_service.coordinates_of(ell4, ell4_ds).values
    assert np.max(np.abs(moved - factor * base)) < 1e-9 * np.max(np.abs(base))
    assert np.allclose(scaled_ds.omega, ell4_ds.omega, atol=1e-9)


@pytest.mark.slow
def test_step_to_reaches_target(moduli_service, g2_23, g2_23_ds):
    coords = moduli_service.base_coordinates(g2_23, g2_23_ds)
    target = coords.shifted(coords.directions[0], 1e-3)
    moved = moduli_service.step_to(g2_23, target, label="g2-23[test]")
    reached = moduli_service.coordinates_of(moved).values
    assert np.max(np.abs(reached - target.values)) < 1e-11 * max(1.0, float(np.max(np.abs(target.values))))


@pytest.mark.slow
def test_a_periods_move_along_their_coordinate(moduli_service, g2_23, g2_23_ds):
    for alpha in range(g2_23.genus):
        direction = CoordinateDirection('A', index=alpha)
        fd = moduli_service.fd_derivative(g2_23, lambda d: d.a_periods([d.v])[0], direction, differentials=g2_23_ds)
        assert np.allclose(fd.value, np.eye(g2_23.genus)[alpha], atol=1e-9)


@pytest.mark.slow
def test_coefficient_tangent_matches_finite_difference(moduli_service, g2_23, g2_23_ds):
    x = g2_23_ds.sample_points(1)[0]
    tangent = moduli_service.coefficient_tangent(g2_23, 2, 1)
    fd = moduli_service.coefficient_fd(g2_23, lambda d: d.point_values([d.v], x)[0], 2, 1,
                                       differentials=g2_23_ds)
    exact = g2_23_ds.point_values([tangent], x)[0]
    assert abs(fd.value - exact) < 1e-6 * abs(exact)


def test_forget_drops_cached_builds(surface_service, ell4, ell4_ds):
    moduli = ModuliService(surface_service)
    first = moduli.coefficient_perturbed(ell4, 1, 0, 1e-4, ell4_ds)
    assert moduli.coefficient_perturbed(ell4, 1, 0, 1e-4, ell4_ds) is first
    moduli.forget(ell4, perturbations_only=True)
    assert id(ell4) in moduli._bases
    assert len(moduli._perturbed) == 0
    assert moduli.coefficient_perturbed(ell4, 1, 0, 1e-4, ell4_ds) is not first
    moduli.forget(ell4)
    assert len(moduli._bases) == 0 and len(moduli._perturbed) == 0
