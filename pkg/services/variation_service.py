import logging
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from config import Config
from models.curve import SurfacePoint
from models.differential import Differential
from models.moduli import CoordinateDirection
from services.differential_service import DifferentialService
from utils.errors import EvaluationError, VariationError, wrap_failure
from utils.memo import MemoStore
from utils.numerics import circle_jet

logger = logging.getLogger(__name__)

# derivative of the new base coordinate and its second derivative, as functions of xi = x - e_i
Reparametrization = Callable[[np.ndarray], tuple]


def cycle_orders(size: int):
    """Closed tours through vertices 0..size-1 starting at 0, one per undirected cycle"""
    if size < 3:
        raise ValueError("cycles need at least three vertices")
    for perm in permutations(range(1, size)):
        if perm[0] < perm[-1]:
            yield (0,) + perm


def path_orders(size: int):
    """Open paths from vertex 0 to vertex size-1 visiting every other vertex once"""
    if size < 2:
        raise ValueError("paths need at least two vertices")
    for perm in permutations(range(1, size - 1)):
        yield (0,) + perm + (size - 1,)


def _chain_product(weight: Callable, order, closed: bool):
    steps = list(zip(order[:-1], order[1:]))
    if closed:
        steps.append((order[-1], order[0]))
    total = 1.0
    for a, b in steps:
        total = total * weight(a, b)
    return total


def q_value(weight: Callable, v_values) -> complex:
    """Q for the vertex weights B(a, b) and the values of v at the vertices"""
    size = len(v_values)
    denominator = np.prod(np.stack(np.broadcast_arrays(*v_values)), axis=0)
    if size == 2:
        return weight(0, 1) ** 2 / denominator
    return 2.0 * sum(_chain_product(weight, order, True) for order in cycle_orders(size)) / denominator


def r_value(weight: Callable, v_values):
    size = len(v_values)
    if size == 2:
        return weight(0, 1)
    middle = np.prod(np.stack(np.broadcast_arrays(*v_values[1:-1])), axis=0)
    return sum(_chain_product(weight, order, False) for order in path_orders(size)) / middle


class VariationService:
    """Residue formulas for derivatives along the moduli coordinates"""

    def __init__(self, differentials: DifferentialService):
        self.config = Config()
        self.differentials = differentials
        self.curve = differentials.curve
        self._directions = MemoStore()

    # ------------------------------------------------------------ directions

    def direction_differential(self, direction: CoordinateDirection) -> Differential:
        """dv along a coordinate: v_gamma for A, w for C with ell >= 2, u for C with ell = 1"""
        return self._directions.get(direction.name, lambda: self._build_direction(direction))

    def _build_direction(self, direction: CoordinateDirection) -> Differential:
        ds = self.differentials
        if direction.kind == 'A':
            if not 0 <= direction.index < self.curve.genus:
                raise VariationError(f"A-coordinate index {direction.index} outside 0..{self.curve.genus - 1}")
            h = ds.basis[direction.index]
        elif direction.kind == 'C':
            if direction.is_dependent:
                raise VariationError("C0.0.1 is fixed by the residue theorem and is not a coordinate")
            if not 0 <= direction.pole < len(self.curve.poles) or direction.sheet not in (0, 1):
                raise VariationError(f"no pole point for {direction.name}")
            if not 1 <= direction.order <= self.curve.poles[direction.pole].k:
                raise VariationError(f"order of {direction.name} exceeds the pole order")
            if direction.order >= 2:
                h = ds.second_kind(direction.pole, direction.sheet, direction.order)
            else:
                h = ds.third_kind(direction.pole, direction.sheet)
        else:
            raise VariationError(f"unknown coordinate kind {direction.kind!r}")
        return h

    def _as_differential(self, direction) -> Differential:
        if isinstance(direction, Differential):
            return direction
        return self.direction_differential(direction)

    # ------------------------------------------------------ endpoint factors

    def branch_factor(self, direction, index: int, reparam: Optional[Reparametrization] = None) -> complex:
        """(h / d ln(v/dxi)) at branch point `index`.

        With reparam the base coordinate xi is replaced by eta(xi) and the
        factor is evaluated from closed-form values on the jet circle.
        """
        ds = self.differentials
        h = self._as_differential(direction)
        g_h = ds.direction_jet(h, index)
        jet = ds.branch_jets[index]
        if reparam is None:
            return complex(g_h[0] * jet.a / jet.b)

        chart = ds.branch_chart(index)

        def ratio(t):
            x, dxdt, w = ds.surfaces.chart_frame(self.curve, chart, t)
            deta, d2eta = reparam(x - chart.center)
            phi = ds.v.evaluate(x, w)
            y_eta = phi / deta
            dy_eta = dxdt * (ds.v_derivative(x, w) / deta - phi * d2eta / deta ** 2)
            return h.evaluate(x, w) * dxdt * y_eta / dy_eta

        return complex(circle_jet(ratio, chart.radius, order=0).value)

    def endpoint_correction(self, direction, zero_index: int, reparam: Optional[Reparametrization] = None) -> complex:
        """Extra term in the derivative of int_{x_r}^{x_i} v at a branch point; zero at regular zeros"""
        zero = self.curve.zeros[zero_index]
        if zero.kind != 'branch':
            logger.info(f"Zero {zero_index} of {self.curve.label} is not a branch point: no endpoint correction")
            return 0j
        return -self.branch_factor(direction, zero.point.branch, reparam)

    def branch_factors(self, direction) -> np.ndarray:
        return np.array([self.branch_factor(direction, i) for i in range(len(self.curve.branch_points))])

    # ---------------------------------------------------------- period matrix

    @wrap_failure(VariationError, "vary the period matrix")
    def vary_period_matrix(self, direction, both: bool = False):
        """dOmega along a direction from the branch-point residue formula.

        Both the endpoint-factor form and the single-residue form are
        evaluated; they must agree before the matrix is returned.
        """
        ds = self.differentials
        h = self._as_differential(direction)
        factors = self.branch_factors(h)
        jets = ds.branch_jets
        paired = sum(f * np.outer(j.values, j.values) / (2 * j.a) for f, j in zip(factors, jets))
        paired = -2j * np.pi * paired

        single = np.zeros_like(paired)
        for i in range(len(jets)):
            chart = ds.branch_chart(i)
            t, g_t, _, _ = ds.branch_circle(i)
            x, dxdt, w = ds.surfaces.chart_frame(self.curve, chart, t)
            h_t = h.evaluate(x, w) * dxdt
            kernel = h_t / (4 * t ** 2 * ds.v_derivative(x, w))
            for a in range(self.curve.genus):
                for b in range(a, self.curve.genus):
                    single[a, b] = single[b, a] = single[a, b] + ds.circle_residue(g_t[a] * g_t[b] * kernel, i)
        single = -2j * np.pi * single

        scale = max(float(np.max(np.abs(paired))), 1e-300)
        gap = float(np.max(np.abs(paired - single)))
        if gap > self.config.TOL_FORMS * scale:
            raise VariationError(f"period-matrix variation forms disagree by {gap / scale:.2e} "
                                 f"along {h.label}")
        logger.debug(f"dOmega along {h.label}: forms agree to {gap / scale:.1e}")
        return (paired, single) if both else paired

    # --------------------------------------------------------------- kernels

    def _branch_sum(self, h: Differential, kernel: Callable) -> complex:
        """-sum_i bf_i res_{t = x_i} kernel(i)"""
        total = 0j
        for i in range(len(self.curve.branch_points)):
            total += self.branch_factor(h, i) * self.differentials.circle_residue(kernel(i), i)
        return -total

    @wrap_failure(VariationError, "vary a canonical kernel")
    def vary_kernel(self, target: str, direction, x: SurfacePoint, y: SurfacePoint = None,
                    alpha: int = 0) -> complex:
        """Variation of v_alpha(x), B(x, y) or ln E(x, y) at fixed base coordinates"""
        ds = self.differentials
        h = self._as_differential(direction)
        if target == 'v':
            def kernel(i):
                _, g_t, phi_t, _ = ds.branch_circle(i)
                return g_t[alpha] * ds.kernel_on_circle(x, i) / phi_t
        elif target == 'B':
            if y is None:
                raise EvaluationError("B target needs two points")

            def kernel(i):
                phi_t = ds.branch_circle(i)[2]
                return ds.kernel_on_circle(x, i) * ds.kernel_on_circle(y, i) / phi_t
        elif target == 'lnE':
            if y is None:
                raise EvaluationError("lnE target needs two points")
            between = ds.abel_difference(x, y)
            char = ds.primary_characteristic[0]

            def kernel(i):
                _, g_t, phi_t, abel_t = ds.branch_circle(i)
                dz_x = ds.branch_offset(x, i)[:, None] + abel_t
                dz_y = dz_x - between[:, None]
                diff = ds.log_theta_gradient(dz_x, char) - ds.log_theta_gradient(dz_y, char)
                return 0.5 * np.sum(g_t * diff, axis=0) ** 2 / phi_t
        else:
            raise VariationError(f"unknown kernel target {target!r}; expected v, B or lnE")
        return self._branch_sum(h, kernel)

    # ------------------------------------------------------------------- tau

    def residues_of_v(self) -> np.ndarray:
        ds = self.differentials
        return np.array([ds.pole_laurent([ds.v], j, s).residue[0]
                         for j in range(len(self.curve.poles)) for s in range(2)])

    @wrap_failure(VariationError, "evaluate the tau gradient")
    def tau_gradient(self, direction, allow_residues: bool = False) -> complex:
        """d ln tau / dA_gamma from residues of B_reg / v at every zero of v"""
        ds = self.differentials
        if isinstance(direction, CoordinateDirection) and direction.kind != 'A':
            raise VariationError(f"tau gradient is defined along A-coordinates, got {direction.name}")
        residues = self.residues_of_v()
        if not allow_residues and np.max(np.abs(residues)) > 1e-8 * max(1.0, float(np.max(np.abs(residues)))):
            raise VariationError(f"tau gradient needs a residue-free instance; {self.curve.label} has "
                                 f"max |res v| = {np.max(np.abs(residues)):.2e}")
        h = self._as_differential(direction)
        branch_part = 0j
        flat_part = 0j
        for index, zero in enumerate(self.curve.zeros):
            if zero.kind == 'branch':
                branch_part += self.branch_factor(h, zero.point.branch) * ds.bergman_over_v_residue(index)
            flat_part += ds.flat_residue(h, index)
        return complex(-2j * np.pi * branch_part - 0.125j * np.pi * flat_part)

    def corrected_path_integral(self, h: Differential, zero_index: int, gamma: int) -> complex:
        """int v_gamma from x_r to zero `zero_index` along a path with zero intersection with all cycles"""
        ds = self.differentials
        path = self.curve.basis.zero_paths[zero_index]
        if not path.pieces:
            return 0j
        raw = complex(ds.integrate_over([h], path)[0])
        with_a, with_b = ds.surfaces.path_cycle_intersections(self.curve.basis, path)
        return raw - with_b[gamma] + complex(with_a @ ds.omega[:, gamma])

    @wrap_failure(VariationError, "evaluate the tau chain rule")
    def tau_chain_rule(self, direction: CoordinateDirection) -> complex:
        """d ln tau / dA_gamma from cycle integrals of B_reg / v and the period derivatives"""
        ds = self.differentials
        if direction.kind != 'A':
            raise VariationError(f"tau chain rule is defined along A-coordinates, got {direction.name}")
        gamma = direction.index
        h = self.direction_differential(direction)
        a_F, b_F = ds.bergman_over_v_cycles()
        total = -b_F[gamma] + complex(ds.omega[:, gamma] @ a_F)
        for index, zero in enumerate(self.curve.zeros):
            residue = ds.bergman_over_v_residue(index)
            if index != self.curve.root_index:
                total += 2j * np.pi * self.corrected_path_integral(h, index, gamma) * residue
            if zero.kind == 'branch':
                total -= 2j * np.pi * self.branch_factor(h, zero.point.branch) * residue
        return complex(total)

    # ------------------------------------------------------------- hierarchy

    def _pair_matrix(self, points):
        ds = self.differentials
        size = len(points)
        for a in range(size):
            for b in range(a + 1, size):
                if points[a] == points[b]:
                    raise EvaluationError(f"coincident points {a} and {b} in a multi-differential")
        matrix = np.zeros((size, size), dtype=complex)
        for a in range(size):
            for b in range(a + 1, size):
                matrix[a, b] = matrix[b, a] = ds.bidifferential(points[a], points[b])
        return matrix

    def _v_at(self, points, diffs=None):
        ds = self.differentials
        diffs = diffs or [ds.v]
        return np.array([ds.point_values(diffs, p) for p in points])  # [point, diff]

    def q_multidiff(self, points) -> complex:
        """Q_n: 2 sum over cycles of prod B / prod v; Q_2 = B^2 / (v v)"""
        if len(points) < 2:
            raise EvaluationError("Q_n needs at least two points")
        B = self._pair_matrix(points)
        return complex(q_value(lambda a, b: B[a, b], list(self._v_at(points)[:, 0])))

    def r_multidiff(self, points) -> complex:
        """R_n: sum over paths from the first to the last point of prod B / prod of middle v"""
        if len(points) < 2:
            raise EvaluationError("R_n needs at least two points")
        B = self._pair_matrix(points)
        return complex(r_value(lambda a, b: B[a, b], list(self._v_at(points)[:, 0])))

    def r_ab(self, alpha: int, beta: int, points) -> complex:
        ds = self.differentials
        first = ds.point_values(ds.basis, points[0])[alpha]
        last = ds.point_values(ds.basis, points[-1])[beta]
        v = self._v_at(points)[:, 0]
        if len(points) == 1:
            return complex(first * last / v[0])
        B = self._pair_matrix(points)
        paths = sum(_chain_product(lambda a, b: B[a, b], order, False) for order in path_orders(len(points)))
        return complex(first * last * paths / np.prod(v))

    @wrap_failure(VariationError, "vary a multi-differential")
    def hierarchy_variation(self, level: int, direction, points, kind: str = 'Q') -> complex:
        """-sum bf_i res_t of Q_{n+1}(z, t), or of R_{n+1} with t inserted before the last point"""
        ds = self.differentials
        if len(points) != level or level < 2:
            raise EvaluationError(f"level {level} needs {level} points (at least two)")
        h = self._as_differential(direction)
        B = self._pair_matrix(points)
        v = list(self._v_at(points)[:, 0])

        def kernel(i):
            phi_t = ds.branch_circle(i)[2]
            to_t = [ds.kernel_on_circle(p, i) for p in points]
            if kind == 'Q':
                def weight(a, b):
                    if b == level:
                        return to_t[a]
                    if a == level:
                        return to_t[b]
                    return B[a, b]
                return q_value(weight, v + [phi_t])
            # vertices: points[:-1], t, points[-1]
            where = list(range(level - 1)) + [None, level - 1]

            def weight(a, b):
                pa, pb = where[a], where[b]
                if pa is None:
                    return to_t[pb]
                if pb is None:
                    return to_t[pa]
                return B[pa, pb]
            return r_value(weight, v[:-1] + [phi_t] + v[-1:])

        if kind not in ('Q', 'R'):
            raise VariationError(f"unknown hierarchy {kind!r}; expected Q or R")
        return self._branch_sum(h, kernel)

    def fixed_point_variation(self, level: int, direction, points, kind: str = 'Q') -> complex:
        """Derivative of Q_n or R_n at fixed base coordinates, including the v(z) denominators"""
        h = self._as_differential(direction)
        values = self._v_at(points, [self.differentials.v, h])
        ratios = values[:, 1] / values[:, 0]
        if kind == 'Q':
            return self.hierarchy_variation(level, h, points, 'Q') - self.q_multidiff(points) * complex(np.sum(ratios))
        return (self.hierarchy_variation(level, h, points, 'R')
                - self.r_multidiff(points) * complex(np.sum(ratios[1:-1])))

    # ---------------------------------------------------------------- Hessian

    @wrap_failure(VariationError, "evaluate the period Hessian")
    def period_hessian(self, alpha: int, beta: int, gamma: int, delta: int) -> complex:
        """d^2 Omega_ab / dA_d dA_g from the branch jet table"""
        jets, cross = self.differentials.branch_jet_table()
        g = np.array([j.values for j in jets])  # [branch, basis]
        g2 = np.array([j.second for j in jets])
        yp = np.array([j.y_prime for j in jets])
        y3 = np.array([j.y_third for j in jets])
        S = np.array([j.projective for j in jets])
        a, b, c, d = alpha, beta, gamma, delta

        pairs = (np.outer(g[:, d] * g[:, c], g[:, a] * g[:, b])
                 + np.outer(g[:, d] * g[:, a], g[:, b] * g[:, c])
                 + np.outer(g[:, d] * g[:, b], g[:, c] * g[:, a]))
        off = 0.25 * np.sum(cross * pairs / np.outer(yp, yp))

        quartic = g[:, a] * g[:, b] * g[:, c] * g[:, d]
        seconds = (g2[:, a] * g[:, b] * g[:, c] * g[:, d] + g2[:, b] * g[:, c] * g[:, d] * g[:, a]
                   + g2[:, c] * g[:, d] * g[:, a] * g[:, b] + g2[:, d] * g[:, a] * g[:, b] * g[:, c])
        diagonal = 0.125 * np.sum((S / yp ** 2 - y3 / yp ** 3) * quartic + seconds / yp ** 2)
        return complex(2j * np.pi * (off + diagonal))

    def period_hessian_tensor(self) -> np.ndarray:
        genus = self.curve.genus
        out = np.zeros((genus,) * 4, dtype=complex)
        for idx in np.ndindex(*out.shape):
            out[idx] = self.period_hessian(*idx)
        return out
