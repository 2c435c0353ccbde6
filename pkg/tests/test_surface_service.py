import numpy as np
import numpy.polynomial.polynomial as P
import pytest

from models.curve import SurfacePoint
from services.surface_service import SurfaceService
from utils.errors import SurfaceError


def test_ell4_counts(ell4):
    assert ell4.genus == 1
    assert len(ell4.branch_points) == 4
    assert len(ell4.zeros) == 8
    assert len(ell4.branch_zeros) == 4


def test_branch_points_are_discriminant_roots(ell4):
    values = P.polyval(ell4.branch_points, ell4.discriminant)
    assert np.max(np.abs(values)) < 1e-9


def test_sheet_values_solve_spectral_equation(surface_service, g2_23):
    x = g2_23.basepoint + 0.1
    N1, N2 = g2_23.numerators
    for sheet in (0, 1):
        psi = surface_service.sheet_phi(g2_23, x, sheet) * P.polyval(x, g2_23.pole_poly)
        assert abs(psi ** 2 + P.polyval(x, N1) * psi + P.polyval(x, N2)) < 1e-9 * max(1.0, abs(psi) ** 2)
        w = surface_service.sheet_w(g2_23, x, sheet)
        assert abs(w ** 2 - P.polyval(x, g2_23.discriminant)) < 1e-9 * abs(w) ** 2


def test_sheet_zero_is_lexicographically_first(surface_service, ell4):
    phi = [surface_service.sheet_phi(ell4, ell4.basepoint, s) for s in (0, 1)]
    assert (phi[0].real, phi[0].imag) <= (phi[1].real, phi[1].imag)


def test_monodromy_transpositions(ell4):
    assert len(ell4.monodromy) == 4
    for _, perm in ell4.monodromy:
        assert sorted(perm) == [0, 1] and list(perm) == [1, 0]
    assert SurfaceService.compose([p for _, p in ell4.monodromy]) == [0, 1]


def test_n3_monodromy_product_is_identity(n3_smoke):
    assert n3_smoke.basis is None
    perms = [p for _, p in n3_smoke.monodromy]
    assert len(perms) == n3_smoke.counts.branch_points
    assert SurfaceService.compose(perms) == [0, 1, 2]


def test_check_monodromy_accepts_built_curves(ell4, n3_smoke):
    SurfaceService.check_monodromy(ell4.monodromy, 2, ell4.label)
    SurfaceService.check_monodromy(n3_smoke.monodromy, 3, n3_smoke.label)


@pytest.mark.parametrize("perms, match", [
    ([(0, (1, 2, 0)), (1, (2, 0, 1))], "not a transposition"),
    ([(0, (0, 1, 2)), (1, (1, 0, 2))], "not a transposition"),
    ([(0, (1, 0, 2)), (1, (0, 2, 1))], "expected identity"),
])
def test_check_monodromy_rejects_bad_permutations(perms, match):
    with pytest.raises(SurfaceError, match=match):
        SurfaceService.check_monodromy(perms, 3, "fake")


def test_homology_basis_is_canonical(g2_23):
    basis = g2_23.basis
    assert basis.genus == 2
    a_dot_b = basis.a_dot_gap @ basis.b_from_gaps.T
    assert np.array_equal(np.rint(a_dot_b).astype(int), np.eye(2, dtype=int))


def test_zero_paths_start_at_root(g2_23):
    root = g2_23.root_zero.point
    for i, path in enumerate(g2_23.basis.zero_paths):
        if i == g2_23.root_index:
            assert not path.pieces
            continue
        assert abs(path.start - root.x) < 1e-12
        assert abs(path.end - g2_23.zeros[i].point.x) < 1e-12


def test_reference_build_keeps_labels(instance_service, surface_service, ell4):
    rebuilt = surface_service.build_surface(instance_service.load("ell4"), reference=ell4)
    assert np.allclose(rebuilt.branch_points, ell4.branch_points)
    assert rebuilt.sigma == ell4.sigma
    assert rebuilt.root_index == ell4.root_index


def test_canonical_path_endpoints(surface_service, g2_23):
    x0 = g2_23.basepoint
    start, end = SurfacePoint(x0, 0), SurfacePoint(x0 + 0.3, 1)
    path = surface_service.canonical_path(g2_23, start, end)
    assert abs(path.start - start.x) < 1e-12
    assert abs(path.end - end.x) < 1e-12
    assert path.end_sheet == 1


def test_charts_scale_with_distance(surface_service, ell4):
    branch = surface_service.chart_at(ell4, SurfacePoint(complex(ell4.branch_points[0]), 0, branch=0))
    assert branch.kind == 'branch'
    assert branch.radius == pytest.approx(np.sqrt(0.2) * branch.reach)
    regular = surface_service.chart_at(ell4, SurfacePoint(ell4.basepoint, 0))
    assert regular.radius == pytest.approx(0.2 * regular.reach)


def test_continue_sheet_swaps_around_a_branch_point(surface_service, ell4):
    loop = surface_service.branch_loop(ell4, 0)
    end, log = surface_service.continue_sheet(ell4, loop, 0)
    assert end == 1
    assert log
    back, _ = surface_service.continue_sheet(ell4, loop, 1)
    assert back == 0
