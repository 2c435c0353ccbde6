import itertools

import numpy as np
import pytest

from models.moduli import CoordinateDirection
from services.harness_service import cubic_reparametrization
from services.variation_service import cycle_orders, path_orders, q_value, r_value
from utils.errors import EvaluationError, VariationError

A0 = CoordinateDirection('A', index=0)
A1 = CoordinateDirection('A', index=1)


def rel_err(got, want):
    got, want = np.asarray(got), np.asarray(want)
    return float(np.max(np.abs(got - want))) / max(float(np.max(np.abs(want))), 1e-300)


def test_cycle_and_path_counts():
    assert len(list(cycle_orders(3))) == 1
    assert len(list(cycle_orders(4))) == 3
    assert len(list(cycle_orders(5))) == 12
    assert len(list(path_orders(2))) == 1
    assert len(list(path_orders(4))) == 2
    with pytest.raises(ValueError):
        list(cycle_orders(2))


def test_hierarchy_values_with_constant_weights():
    assert q_value(lambda a, b: 3.0, [1.0, 1.0]) == 9.0
    assert q_value(lambda a, b: 1.0, [1.0, 1.0, 1.0]) == 2.0
    assert q_value(lambda a, b: 1.0, [1.0, 2.0, 1.0, 1.0]) == 3.0
    assert r_value(lambda a, b: 2.0, [1.0, 4.0, 1.0]) == 1.0


@pytest.mark.parametrize("name", ["A5", "C0.0.1", "C0.0.3", "C2.0.1", "C0.2.1"])
def test_invalid_directions(g2_23_vs, name):
    with pytest.raises(VariationError):
        g2_23_vs.direction_differential(CoordinateDirection.parse(name))


def test_direction_differentials_are_cached(g2_23_vs):
    direction = CoordinateDirection.parse("C1.1.3")
    assert g2_23_vs.direction_differential(direction) is g2_23_vs.direction_differential(direction)


@pytest.mark.parametrize("name", ["A0", "A1", "C1.0.2", "C0.1.1"])
def test_period_variation_forms_agree(g2_23_vs, name):
    paired, single = g2_23_vs.vary_period_matrix(CoordinateDirection.parse(name), both=True)
    assert rel_err(single, paired) < 1e-9
    assert np.allclose(paired, paired.T)


def test_period_variation_is_totally_symmetric(g2_23_vs):
    tensor = np.stack([g2_23_vs.vary_period_matrix(d) for d in (A0, A1)], axis=-1)
    for perm in itertools.permutations(range(3)):
        assert rel_err(np.transpose(tensor, perm), tensor) < 1e-9


def test_no_endpoint_correction_at_regular_zeros(g2_23_vs, g2_23):
    regular = [i for i, z in enumerate(g2_23.zeros) if z.kind == 'regular']
    assert regular
    for index in regular:
        assert g2_23_vs.endpoint_correction(A0, index) == 0


def test_branch_factor_independent_of_base_coordinate(g2_23_vs, g2_23):
    for index in range(len(g2_23.branch_points)):
        plain = g2_23_vs.branch_factor(A1, index)
        moved = g2_23_vs.branch_factor(A1, index, cubic_reparametrization)
        assert abs(moved - plain) < 1e-8 * max(1.0, abs(plain))


def test_period_variation_vanishes_along_v(g2_23_vs, g2_23_ds):
    assert np.max(np.abs(g2_23_vs.branch_factors(g2_23_ds.v))) < 1e-10


def test_unknown_kernel_target(g2_23_vs, g2_23_ds):
    x = g2_23_ds.sample_points(1)[0]
    with pytest.raises(VariationError):
        g2_23_vs.vary_kernel('theta', A0, x)
    with pytest.raises(EvaluationError):
        g2_23_vs.vary_kernel('B', A0, x)


def test_kernel_variation_symmetric(g2_23_vs, g2_23_ds):
    x, y = g2_23_ds.sample_points(2)
    assert rel_err(g2_23_vs.vary_kernel('B', A0, x, y), g2_23_vs.vary_kernel('B', A0, y, x)) < 1e-8


def test_tau_needs_a_coordinate(g2_resfree_vs):
    with pytest.raises(VariationError):
        g2_resfree_vs.tau_gradient(CoordinateDirection.parse("C0.1.2"))


def test_tau_refuses_residues(g2_23_vs):
    if np.max(np.abs(g2_23_vs.residues_of_v())) < 1e-6:
        pytest.skip("instance has no residues")
    with pytest.raises(VariationError):
        g2_23_vs.tau_gradient(A0)


def test_resfree_instance_has_no_residues(g2_resfree_vs):
    assert np.max(np.abs(g2_resfree_vs.residues_of_v())) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("direction", [A0, A1])
def test_tau_gradient_matches_chain_rule(g2_resfree_vs, direction):
    assert rel_err(g2_resfree_vs.tau_gradient(direction), g2_resfree_vs.tau_chain_rule(direction)) < 1e-6


def test_two_point_hierarchy(g2_23_vs, g2_23_ds):
    x, y = g2_23_ds.sample_points(2)
    B = g2_23_ds.bidifferential(x, y)
    vx, vy = (g2_23_ds.point_values([g2_23_ds.v], p)[0] for p in (x, y))
    assert rel_err(g2_23_vs.r_multidiff([x, y]), B) < 1e-12
    assert rel_err(g2_23_vs.q_multidiff([x, y]), B ** 2 / (vx * vy)) < 1e-12


def test_q3_symmetric_in_points(g2_23_vs, g2_23_ds):
    points = g2_23_ds.sample_points(3)
    base = g2_23_vs.q_multidiff(points)
    for perm in itertools.permutations(points):
        assert rel_err(g2_23_vs.q_multidiff(list(perm)), base) < 1e-10


def test_r_ab_single_point(g2_23_vs, g2_23_ds):
    x = g2_23_ds.sample_points(1)[0]
    g = g2_23_ds.point_values(g2_23_ds.basis, x)
    v = g2_23_ds.point_values([g2_23_ds.v], x)[0]
    assert rel_err(g2_23_vs.r_ab(0, 1, [x]), g[0] * g[1] / v) < 1e-12


def test_coincident_points_rejected(g2_23_vs, g2_23_ds):
    x = g2_23_ds.sample_points(1)[0]
    with pytest.raises(EvaluationError):
        g2_23_vs.q_multidiff([x, x])
    with pytest.raises(EvaluationError):
        g2_23_vs.hierarchy_variation(3, A0, [x, x])


def test_hierarchy_level_must_match_points(g2_23_vs, g2_23_ds):
    with pytest.raises(EvaluationError):
        g2_23_vs.hierarchy_variation(3, A0, g2_23_ds.sample_points(2))
    with pytest.raises(VariationError):
        g2_23_vs.hierarchy_variation(2, A0, g2_23_ds.sample_points(2), kind='S')


def test_r2_variation_is_kernel_variation(g2_23_vs, g2_23_ds):
    x, y = g2_23_ds.sample_points(2)
    assert rel_err(g2_23_vs.hierarchy_variation(2, A0, [x, y], 'R'), g2_23_vs.vary_kernel('B', A0, x, y)) < 1e-12


def test_period_hessian_symmetric(g2_23_vs):
    tensor = g2_23_vs.period_hessian_tensor()
    for perm in itertools.permutations(range(4)):
        assert rel_err(np.transpose(tensor, perm), tensor) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("name", ["A0", "C1.0.2"])
def test_period_variation_matches_finite_difference(moduli_service, g2_23, g2_23_ds, g2_23_vs, name):
    direction = CoordinateDirection.parse(name)
    fd = moduli_service.fd_derivative(g2_23, lambda d: d.omega, direction, differentials=g2_23_ds)
    assert rel_err(g2_23_vs.vary_period_matrix(direction), fd.value) < 1e-5


@pytest.mark.slow
def test_kernel_variation_matches_finite_difference(moduli_service, g2_23, g2_23_ds, g2_23_vs):
    x, y = g2_23_ds.sample_points(2)
    fd = moduli_service.fd_derivative(g2_23, lambda d: d.bidifferential(x, y), A1, differentials=g2_23_ds)
    assert rel_err(g2_23_vs.vary_kernel('B', A1, x, y), fd.value) < 1e-4
