import logging
from dataclasses import replace
from functools import cached_property

import numpy as np
import numpy.polynomial.polynomial as P
from scipy.linalg import cholesky

from config import Config
from models.curve import Chart, SpectralCurve, SurfacePoint
from models.differential import (BranchJet, Differential, PeriodData, RationalTerm, SingularPart,
                                 ThetaParams)
from services.surface_service import SurfaceService
from utils.errors import EvaluationError, HomologyError, ThetaError, wrap_failure
from utils.geometry import stadium
from utils.memo import MemoStore
from utils.numerics import (adaptive_gauss_legendre, circle_jet, circle_points, gauss_legendre, integrate,
                            log_near_one, series_div, series_mul, series_sqrt1p, shifted_power_poly, solve_dense)
from utils.theta import characteristics, is_odd, lattice_reduce, log_theta_derivatives, theta

logger = logging.getLogger(__name__)


class DifferentialService:
    """Analytic objects on one built curve: normalized basis, kernels, theta data and jets"""

    def __init__(self, curve: SpectralCurve, surface_service: SurfaceService = None,
                 reference: 'DifferentialService' = None):
        self.config = Config()
        self.curve = curve
        self.surfaces = surface_service or SurfaceService()
        self.reference = reference
        self._circles = MemoStore()
        self._offsets = MemoStore()
        self._direction_jets = MemoStore()
        self._half_densities = MemoStore()
        if curve.n != 2 or curve.basis is None:
            raise HomologyError("differentials require an n = 2 cover of positive genus")

    # ------------------------------------------------------------ evaluation

    @cached_property
    def v(self) -> Differential:
        N1 = self.curve.numerators[0]
        disc = self.curve.discriminant
        ledger = tuple(SingularPart(SurfacePoint(pole.x, s), ()) for pole in self.curve.poles for s in range(2))
        return Differential("v", (RationalTerm.of(-0.5 * N1, 0.5 * disc, self.curve.pole_poly),), ledger)

    def values(self, diffs, x, sheet):
        """Values relative to dx in the cut-plane model; one row per differential"""
        x = np.asarray(x, dtype=complex)
        w = self.surfaces.sheet_w(self.curve, x, sheet)
        return np.stack([d.evaluate(x, w) for d in diffs])

    def point_values(self, diffs, point: SurfacePoint):
        if point.is_branch:
            raise EvaluationError(f"Differentials relative to dx are singular at branch point {point.x:.6g}")
        return self.values(diffs, point.x, point.sheet)

    def v_derivative(self, x, w):
        """d(v/dx)/dx at base points x with square-root values w"""
        N1, pole_poly, disc = self.curve.numerators[0], self.curve.pole_poly, self.curve.discriminant
        x = np.asarray(x, dtype=complex)
        num = -P.polyval(x, N1) + w
        dnum = -P.polyval(x, P.polyder(N1)) + P.polyval(x, P.polyder(disc)) / (2.0 * w)
        den = P.polyval(x, pole_poly)
        return (dnum * den - num * P.polyval(x, P.polyder(pole_poly))) / (2.0 * den ** 2)

    def chart_values(self, diffs, chart: Chart, t):
        """Values relative to dt in the chart"""
        x, dxdt, w = self.surfaces.chart_frame(self.curve, chart, t)
        return np.stack([d.evaluate(x, w) * dxdt for d in diffs])

    def integrate_over(self, diffs, contour, tol: float = None):
        def f(x, sheet):
            return self.values(diffs, x, sheet)
        return integrate(f, contour, tol or self.config.QUAD_TOL)

    def a_periods(self, diffs):
        """a-cycle integrals only; rows are differentials"""
        return np.stack([self.integrate_over(diffs, c) for c in self.curve.basis.a_cycles], axis=-1)

    def cycle_integrals(self, diffs):
        """(a-cycle, b-cycle) integrals; rows are differentials, columns cycles"""
        basis = self.curve.basis
        a = np.stack([self.integrate_over(diffs, c) for c in basis.a_cycles], axis=-1)
        gaps = np.stack([self.integrate_over(diffs, c) for c in basis.gap_cycles], axis=-1)
        return a, self.surfaces.b_cycle_combination(basis, gaps, a)

    def chart_at(self, point: SurfacePoint) -> Chart:
        return self.surfaces.chart_at(self.curve, point)

    def jet(self, diffs, chart: Chart, laurent: int = 0, order: int = None, rho: float = None):
        return circle_jet(lambda t: self.chart_values(diffs, chart, t), rho or chart.radius,
                          order=self.config.JET_ORDER if order is None else order, laurent=laurent,
                          center=chart.center)

    def pole_laurent(self, diffs, pole_index: int, sheet: int, window: int = None):
        """Laurent coefficients at y_j^(s) in x - y_j"""
        pole = self.curve.poles[pole_index]
        chart = self.chart_at(SurfacePoint(pole.x, sheet))
        return self.jet(diffs, chart, laurent=window or pole.k)

    # ------------------------------------------------------- normalized basis

    @cached_property
    def raw_basis(self):
        return tuple(Differential(f"x^{k} dx/w", (RationalTerm.of(num1=np.eye(self.curve.genus)[k]),))
                     for k in range(self.curve.genus))

    @cached_property
    @wrap_failure(HomologyError, "normalize holomorphic differentials")
    def period_data(self) -> PeriodData:
        genus = self.curve.genus
        raw_a, raw_b = self.cycle_integrals(self.raw_basis)  # [k, cycle]
        A, B = raw_a.T, raw_b.T  # [cycle, k]
        coeffs_t, cond = solve_dense(A, np.eye(genus))
        C = coeffs_t.T
        omega = B @ C.T
        asym = float(np.max(np.abs(omega - omega.T)))
        if asym > 1e-8 * max(1.0, float(np.max(np.abs(omega)))):
            logger.warning(f"Period matrix of {self.curve.label} asymmetric by {asym:.2e}")
        try:
            cholesky(omega.imag, lower=True)
        except np.linalg.LinAlgError:
            raise HomologyError(f"Im Omega is not positive definite for {self.curve.label}: {omega}")
        basis = tuple(Differential(f"v{a}", (RationalTerm.of(num1=C[a]),), (), np.eye(genus)[a])
                      for a in range(genus))
        v_a, v_b = self.cycle_integrals([self.v])
        logger.info(f"Normalized basis for {self.curve.label}: Gram condition {cond:.2e}")
        return PeriodData(A, B, C, omega, basis, cond, v_a[0], v_b[0])

    def normalized_basis(self) -> PeriodData:
        return self.period_data

    @property
    def basis(self):
        return self.period_data.basis

    @property
    def omega(self):
        return self.period_data.omega

    def holomorphic_correction(self, a_periods, label: str) -> Differential:
        """- sum_alpha a_periods[alpha] v_alpha as a single term"""
        num1 = -np.asarray(a_periods) @ self.period_data.normalization
        return Differential(label, (RationalTerm.of(num1=num1),))

    # ------------------------------------------------- second and third kind

    def _w_series(self, y: complex, sheet: int, order: int) -> np.ndarray:
        """Taylor coefficients of w(y + t) on the given sheet"""
        series = np.zeros(order + 1, dtype=complex)
        series[0] = self.surfaces.sheet_w(self.curve, y, sheet)
        for e in self.curve.branch_points:
            series = series_mul(series, series_sqrt1p(y - e, 1, order), order)
        return series

    def second_kind(self, pole_index: int, sheet: int, order: int) -> Differential:
        pole = self.curve.poles[pole_index]
        if not 2 <= order <= pole.k:
            raise EvaluationError(f"order {order} outside 2..{pole.k} for pole {pole_index}")
        y = pole.x
        T = shifted_power_poly(y, self._w_series(y, sheet, order - 1))
        den = P.polypow([-y, 1.0], order)
        raw = Differential("raw", (RationalTerm.of([0.5], 0.5 * T, den),))
        a, _ = self.cycle_integrals([raw])
        coeffs = tuple(1.0 if l == order else 0.0 for l in range(1, order + 1))
        label = f"w{pole_index}.{sheet}.{order}"
        fixed = raw.plus(self.holomorphic_correction(a[0], label), label)
        return Differential(label, fixed.terms, (SingularPart(SurfacePoint(y, sheet), coeffs),),
                            np.zeros(self.curve.genus))

    def _simple_pole_term(self, pole_index: int, sheet: int) -> RationalTerm:
        y = self.curve.poles[pole_index].x
        wy = complex(self.surfaces.sheet_w(self.curve, y, sheet))
        return RationalTerm.of([0.5], [0.5 * wy], [-y, 1.0])

    def third_kind(self, pole_index: int, sheet: int) -> Differential:
        if (pole_index, sheet) == (0, 0):
            raise EvaluationError("third-kind differential requested at its own base point y_0^(0)")
        plus = self._simple_pole_term(pole_index, sheet)
        minus = self._simple_pole_term(0, 0).scaled(-1.0)
        raw = Differential("raw", (plus, minus))
        a, _ = self.cycle_integrals([raw])
        label = f"u{pole_index}.{sheet}"
        fixed = raw.plus(self.holomorphic_correction(a[0], label), label)
        ledger = (SingularPart(SurfacePoint(self.curve.poles[pole_index].x, sheet), (1.0,)),
                  SingularPart(SurfacePoint(self.curve.poles[0].x, 0), (-1.0,)))
        return Differential(label, fixed.terms, ledger, np.zeros(self.curve.genus))

    def second_kind_b_periods(self, pole_index: int, sheet: int, order: int) -> np.ndarray:
        """b-periods of the order-`order` second-kind differential from the jet of v_alpha at its pole"""
        coeffs = self.pole_laurent(self.basis, pole_index, sheet).coefficient(order - 2)
        return 2j * np.pi * np.asarray(coeffs) / (order - 1)

    def third_kind_abel_defect(self, pole_index: int, sheet: int) -> np.ndarray:
        """b-periods of u / 2 pi i minus A(y_j^(s)) - A(y_0^(0)), reduced modulo the period lattice"""
        u = self.third_kind(pole_index, sheet)
        b_periods = self.cycle_integrals([u])[1][0]
        poles = self.curve.poles
        target = self.abel_difference(SurfacePoint(complex(poles[0].x), 0),
                                      SurfacePoint(complex(poles[pole_index].x), sheet))
        return lattice_reduce(b_periods / (2j * np.pi) - target, self.omega)

    # ------------------------------------------------------------- Abel map

    def abel_along(self, contour):
        if not contour.pieces:
            return np.zeros(self.curve.genus, dtype=complex)
        return self.integrate_over(self.basis, contour)

    def abel_map(self, point: SurfacePoint):
        """Integral of the normalized basis from x_r along the reference path"""
        return self.abel_along(self.surfaces.reference_path(self.curve, point))

    @staticmethod
    def _path_key(point: SurfacePoint):
        return point.x.real, point.x.imag, point.sheet

    def abel_difference(self, x: SurfacePoint, y: SurfacePoint):
        """A(y) - A(x) along the canonical path leaving the lexicographically smaller point.

        Swapping the arguments negates the result exactly.
        """
        if self._path_key(y) < self._path_key(x):
            return -self.abel_along(self.surfaces.canonical_path(self.curve, y, x))
        return self.abel_along(self.surfaces.canonical_path(self.curve, x, y))

    def chart_abel(self, chart: Chart, t):
        """A(t) - A(center) by radial Gauss-Legendre in the chart; leading axis = basis index"""
        nodes, weights = gauss_legendre(self.config.QUAD_ORDER)
        t = np.asarray(t, dtype=complex)
        vals = self.chart_values(self.basis, chart, t[..., None] * nodes)
        return t * (vals @ weights)

    # ----------------------------------------------------------------- theta

    def theta_params(self, characteristic=()) -> ThetaParams:
        return ThetaParams(self.omega, characteristic, self.config.THETA_RADIUS, self.config.THETA_LATTICE_CAP)

    def theta(self, z, characteristic=(), order: int = 0):
        return theta(z, self.theta_params(characteristic), order)

    @cached_property
    def odd_characteristics(self):
        """Nonsingular odd characteristics with their theta gradients at 0"""
        genus = self.curve.genus
        found = []
        for char in characteristics(genus):
            if not is_odd(char):
                continue
            _, grad = theta(np.zeros(genus), self.theta_params(char), 1)
            found.append((char, grad))
        if not found:
            raise ThetaError("no odd characteristic available")
        scale = max(float(np.linalg.norm(g)) for _, g in found)
        nonsingular = [(c, g) for c, g in found
                       if np.linalg.norm(g) > self.config.THETA_GRADIENT_FLOOR * max(scale, 1.0)]
        if not nonsingular:
            raise ThetaError("no nonsingular odd characteristic found (degenerate period matrix)")
        return nonsingular

    @cached_property
    def primary_characteristic(self):
        if self.reference is not None:
            ref_char = self.reference.primary_characteristic[0]
            for char, grad in self.odd_characteristics:
                if all(np.array_equal(a, b) for a, b in zip(char, ref_char)):
                    return char, grad
        return self.odd_characteristics[0]

    def select_characteristic(self, samples):
        """Odd characteristic keeping the normalised h_delta^2 largest at every sample"""
        best, best_score = None, -1.0
        for char, grad in self.odd_characteristics:
            norm = np.linalg.norm(grad)
            score = min(abs(np.dot(grad, g)) / (norm * max(np.linalg.norm(g), 1e-300)) for g in samples)
            if score > best_score:
                best, best_score = char, score
        return best

    # --------------------------------------------------- prime form and kernels

    def half_density_squared(self, values, grad=None):
        grad = self.primary_characteristic[1] if grad is None else grad
        return np.tensordot(grad, values, axes=(0, 0))

    def half_density(self, point: SurfacePoint) -> complex:
        """h_delta(x) relative to dx^(1/2): the square root of h_delta^2 continued from x_r along the reference path"""
        if point.is_branch:
            raise EvaluationError(f"Half-density relative to dx is singular at branch point {point.x:.6g}")
        return self._half_densities.get(point, lambda: self._continue_half_density(point))

    def _continue_half_density(self, point: SurfacePoint) -> complex:
        grad = self.primary_characteristic[1]
        samples = self.config.HALF_DENSITY_SAMPLES
        s = (np.arange(samples) + 0.5) / samples
        squares = [self.half_density_squared(self.values(self.basis, piece.points(s), piece.sheet), grad)
                   for piece in self.surfaces.reference_path(self.curve, point).pieces]
        squares.append(np.atleast_1d(self.half_density_squared(self.point_values(self.basis, point), grad)))
        squares = np.concatenate(squares)
        squares = squares[np.isfinite(squares)]
        roots = np.sqrt(squares.astype(complex))
        previous, current = None, roots[0]
        for root in roots[1:]:
            guess = current if previous is None else 2 * current - previous
            previous, current = current, (root if abs(root - guess) <= abs(root + guess) else -root)
        return complex(current)

    def prime_form(self, x: SurfacePoint, y: SurfacePoint) -> complex:
        """E(x, y) relative to the half-densities of dx and dy"""
        char = self.primary_characteristic[0]
        value = complex(theta(self.abel_difference(x, y), self.theta_params(char), 0))
        return value / (self.half_density(x) * self.half_density(y))

    def prime_form_cross_derivative(self, x: SurfacePoint, y: SurfacePoint, step: float = None) -> complex:
        """d_x d_y ln E(x, y) by a central mixed difference; the half-densities cancel in the ratio"""
        step = step or self.config.PRIME_FORM_STEP
        shift = lambda p, d: SurfacePoint(p.x + d, p.sheet)
        ratio = (self.prime_form(shift(x, step), shift(y, step)) * self.prime_form(shift(x, -step), shift(y, -step))
                 / (self.prime_form(shift(x, step), shift(y, -step)) * self.prime_form(shift(x, -step), shift(y, step))))
        return complex(log_near_one(ratio)) / (4 * step ** 2)

    def bergman_kernel(self, gx, gy, dz, characteristic=None):
        """-sum H_ab(dz) gx_a gy_b with dz = A(y) - A(x); gx, gy, dz carry the basis index first"""
        gx, gy, dz = np.asarray(gx), np.asarray(gy), np.asarray(dz)
        if characteristic is None:
            characteristic = self.select_characteristic([gx.reshape(self.curve.genus, -1)[:, 0],
                                                         gy.reshape(self.curve.genus, -1)[:, 0]])
        _, hess = log_theta_derivatives(np.moveaxis(dz, 0, -1), self.theta_params(characteristic))
        return -np.einsum('a...,...ab,b...->...', gx, hess, gy)

    def bidifferential(self, x: SurfacePoint, y: SurfacePoint) -> complex:
        """B(x, y) relative to dx dy"""
        gx = self.point_values(self.basis, x)
        gy = self.point_values(self.basis, y)
        return complex(self.bergman_kernel(gx, gy, self.abel_difference(x, y)))

    def log_theta_gradient(self, dz, characteristic):
        grad, _ = log_theta_derivatives(np.moveaxis(np.asarray(dz), 0, -1), self.theta_params(characteristic))
        return np.moveaxis(grad, -1, 0)

    def hyperelliptic_bidifferential(self, x: SurfacePoint, y: SurfacePoint) -> complex:
        """Algebraic B(x, y) / (dx dy): symmetric polynomial form plus the holomorphic a-period correction"""
        return complex(self._algebraic_kernel(x.x, x.sheet, y.x, y.sheet)
                       - self.point_values(self.basis, x) @ self.algebraic_correction
                       @ self.point_values(self.basis, y))

    def _algebraic_kernel(self, x, sx, y, sy):
        lam = self.curve.discriminant
        lam = np.concatenate([lam, np.zeros(2 * self.curve.genus + 4 - len(lam))])
        wx = self.surfaces.sheet_w(self.curve, x, sx)
        wy = self.surfaces.sheet_w(self.curve, y, sy)
        F = sum((x * y) ** k * (2 * lam[2 * k] + lam[2 * k + 1] * (x + y)) for k in range(self.curve.genus + 2))
        return (F + 2 * wx * wy) / (4 * (x - y) ** 2 * wx * wy)

    @cached_property
    def algebraic_correction(self) -> np.ndarray:
        """Matrix M with B = B_alg - v(x) M v(y) from double a-periods of B_alg"""
        basis = self.curve.basis
        e = self.curve.branch_points
        genus = self.curve.genus
        # outer copies enclose the inner cycles so the diagonal pole is never crossed
        outer_cycles = [stadium(e[2 * k], e[2 * k + 1], 1.6 * basis.cut_radii[k], 0) for k in range(genus)]
        double = np.zeros((genus, genus), dtype=complex)
        for a in range(genus):
            for b in range(genus):
                def outer(x, sx, b=b):
                    return integrate(lambda y, sy: self._algebraic_kernel(x[:, None], sx, y[None, :], sy),
                                     basis.a_cycles[b], self.config.QUAD_TOL_KERNEL)
                double[a, b] = integrate(outer, outer_cycles[a], self.config.QUAD_TOL_KERNEL)
        return double

    # --------------------------------------------------- projective connection

    def _schwarz_circle(self, chart: Chart, g0):
        """6 * mean of B(0, t) - 1/t^2 over a circle in the chart"""
        samples = self.config.SCHWARZ_SAMPLES
        t = circle_points(chart.radius, samples)
        gt = self.chart_values(self.basis, chart, t)
        dz = self.chart_abel(chart, t)
        char = self.select_characteristic([g0, gt[:, 0], gt[:, samples // 2]])
        B = self.bergman_kernel(g0[:, None] * np.ones_like(gt), gt, dz, char)
        return complex(6.0 * np.mean(B - 1.0 / t ** 2))

    def regular_connections(self, centers, sheet):
        """(S_B, S_v, phi) at regular points of one sheet, all in the chart x = center + t.

        Circle samples for every centre are evaluated in one batch.
        """
        centers = np.atleast_1d(np.asarray(centers, dtype=complex))
        samples = self.config.SCHWARZ_SAMPLES
        rho = np.array([self.chart_at(SurfacePoint(complex(z), int(sheet))).radius for z in centers])
        t = circle_points(rho, samples)
        x_t, _, w_t = self.surfaces.regular_frame(self.curve, centers[:, None], sheet, t)
        gt = np.stack([d.evaluate(x_t, w_t) for d in self.basis])
        phi_t = self.v.evaluate(x_t, w_t)

        nodes, weights = gauss_legendre(self.config.QUAD_ORDER)
        x_q, _, w_q = self.surfaces.regular_frame(self.curve, centers[:, None, None], sheet, t[..., None] * nodes)
        dz = t * (np.stack([d.evaluate(x_q, w_q) for d in self.basis]) @ weights)

        g0 = self.values(self.basis, centers, sheet)
        char = self.select_characteristic([g0[:, k] for k in range(len(centers))] + [gt[:, 0, 0]])
        B = self.bergman_kernel(g0[:, :, None] * np.ones_like(gt), gt, dz, char)
        S_B = 6.0 * np.mean(B - 1.0 / t ** 2, axis=-1)

        spectrum = np.fft.fft(phi_t, axis=-1) / samples
        c0, c1, c2 = (spectrum[:, k] / rho ** k for k in range(3))
        scale = np.maximum(np.abs(c0), np.abs(c1) * rho)
        if np.any(np.abs(c0) <= 1e-8 * scale):
            raise EvaluationError(f"B_reg evaluated at a zero of v near {centers[np.argmin(np.abs(c0))]:.6g}")
        S_v = 2 * c2 / c0 - 1.5 * (c1 / c0) ** 2
        return S_B, S_v, c0

    def projective_connection(self, chart: Chart) -> complex:
        """S_B in the chart parameter at the chart centre"""
        if chart.kind == 'branch':
            g0 = self.jet(self.basis, chart, order=2).value
        else:
            g0 = self.values(self.basis, chart.center, chart.sheet)
        return self._schwarz_circle(chart, np.asarray(g0))

    def schwarzian_of_v(self, chart: Chart) -> complex:
        """S_v = phi''/phi - 3/2 (phi'/phi)^2 of phi = v/dt at the regular chart centre"""
        coeffs = self.jet([self.v], chart, order=3).taylor(3)[0]
        scale = float(np.max(np.abs(coeffs))) or 1.0
        if abs(coeffs[0]) <= 1e-10 * scale:
            raise EvaluationError(f"B_reg evaluated at a zero of v near {chart.center:.6g}")
        return complex(2 * coeffs[2] / coeffs[0] - 1.5 * (coeffs[1] / coeffs[0]) ** 2)

    def bergman_reg(self, x: SurfacePoint) -> complex:
        """B_reg(x, x) relative to dx^2, equal to (S_B - S_v) / 6"""
        if x.is_branch:
            raise EvaluationError(f"B_reg relative to dx^2 is singular at branch point {x.x:.6g}")
        chart = self.chart_at(x)
        return (self.projective_connection(chart) - self.schwarzian_of_v(chart)) / 6.0

    def bergman_reg_limit(self, x: SurfacePoint) -> complex:
        """Circle mean of B(x, y) - v(x) v(y) / (int_x^y v)^2, the limit form of B_reg"""
        chart = self.chart_at(x)
        samples = self.config.SCHWARZ_SAMPLES
        t = circle_points(chart.radius, samples)
        g0 = self.point_values(self.basis, x)
        gt = self.chart_values(self.basis, chart, t)
        dz = self.chart_abel(chart, t)
        char = self.select_characteristic([g0, gt[:, 0]])
        B = self.bergman_kernel(g0[:, None] * np.ones_like(gt), gt, dz, char)
        nodes, weights = gauss_legendre(self.config.QUAD_ORDER)
        phi_t = self.chart_values([self.v], chart, t)[0]
        flat = t * (self.chart_values([self.v], chart, t[:, None] * nodes)[0] @ weights)
        phi0 = self.point_values([self.v], x)[0]
        return complex(np.mean(B - phi0 * phi_t / flat ** 2))

    def bergman_over_v(self, x, sheet):
        """B_reg / v relative to dx at an array of regular points on one sheet"""
        S_B, S_v, phi = self.regular_connections(x, sheet)
        return (S_B - S_v) / (6.0 * phi)

    def bergman_over_v_cycles(self):
        """(a-cycle, b-cycle) integrals of B_reg / v"""
        basis = self.curve.basis
        tol = self.config.QUAD_TOL_KERNEL
        a = np.array([integrate(self.bergman_over_v, c, tol) for c in basis.a_cycles])
        gaps = np.array([integrate(self.bergman_over_v, c, tol) for c in basis.gap_cycles])
        return a, self.surfaces.b_cycle_combination(basis, gaps, a)

    # -------------------------------------------------- residues at zeros of v

    def zero_chart(self, index: int) -> Chart:
        zero = self.curve.zeros[index]
        if zero.kind == 'branch':
            return self.branch_chart(zero.point.branch)
        return self.chart_at(zero.point)

    def zero_series(self, index: int) -> np.ndarray:
        """u with v/dt = t u(t) in the chart at zero `index`"""
        zero = self.curve.zeros[index]
        if zero.kind == 'branch':
            return 2.0 * self.branch_jets[zero.point.branch].y
        phi = self.jet([self.v], self.zero_chart(index)).taylor(self.config.JET_ORDER)[0]
        return phi[1:]

    def zero_connection(self, index: int) -> complex:
        zero = self.curve.zeros[index]
        if zero.kind == 'branch':
            return self.branch_jets[zero.point.branch].projective
        return self.projective_connection(self.zero_chart(index))

    def bergman_over_v_residue(self, index: int) -> complex:
        """res of B_reg / v at zero `index` of v"""
        u = self.zero_series(index)
        l0 = u[1] / u[0]
        T = np.array([-1.5, -l0, -0.5 * l0 ** 2])
        return complex(self.zero_connection(index) / (6 * u[0]) - series_div(T, u, 2)[2] / 6)

    def flat_residue(self, h: Differential, index: int) -> complex:
        """res of h(x) / int_{x_i}^x v at zero `index`"""
        u = self.zero_series(index)
        order = self.config.JET_ORDER - 1
        zeta = u[:order + 1] / (np.arange(order + 1) + 2)
        g = self.jet([h], self.zero_chart(index)).taylor(order)[0]
        return complex(series_div(g, zeta, 1)[1])

    def flat_residue_by_quadrature(self, h: Differential, index: int) -> complex:
        """Same residue by circle averaging with the flat coordinate integrated radially"""
        chart = self.zero_chart(index)
        t = circle_points(chart.radius, self.config.JET_SAMPLES)
        nodes, weights = gauss_legendre(self.config.QUAD_ORDER)
        flat = t * (self.chart_values([self.v], chart, t[:, None] * nodes)[0] @ weights)
        return complex(np.mean(t * self.chart_values([h], chart, t)[0] / flat))

    def sample_points(self, count: int = 5):
        """Regular points around the basepoint on alternating sheets, far from every singular point"""
        x0 = self.curve.basepoint
        reach = float(np.min(np.abs(self.curve.singular_points() - x0)))
        angles = 2 * np.pi * (np.arange(count) + 0.25) / count
        return [SurfacePoint(complex(x0 + 0.3 * reach * np.exp(1j * a)), k % 2) for k, a in enumerate(angles)]

    # ---------------------------------------------------------- branch jets

    def branch_chart(self, index: int) -> Chart:
        return self.chart_at(SurfacePoint(complex(self.curve.branch_points[index]), 0, branch=index))

    def branch_jet(self, index: int, rho: float = None) -> BranchJet:
        chart = self.branch_chart(index)
        rho = rho or chart.radius
        order = self.config.JET_ORDER
        g = self.jet(self.basis, chart, rho=rho).taylor(order)
        y = circle_jet(lambda t: self.chart_values([self.v], chart, t)[0] / (2.0 * t), rho,
                       order=order).taylor(order)
        return BranchJet(index, complex(chart.center), self.surfaces.branch_scale(self.curve, index), rho, y, g,
                         self._schwarz_circle(replace(chart, radius=rho), g[:, 0]))

    @cached_property
    @wrap_failure(EvaluationError, "compute branch jets")
    def branch_jets(self):
        jets = tuple(self.branch_jet(i) for i in range(len(self.curve.branch_points)))
        logger.info(f"Branch jets for {self.curve.label}: min |y(e)| = {min(abs(j.a) for j in jets):.3e}")
        return jets

    def branch_jet_stability(self, index: int, order: int = 4):
        """Leading coefficients of v_alpha/dt and v/(2t dt) on the half-radius circle and on the jet circle"""
        full = self.branch_jets[index]
        half = self.branch_jet(index, rho=full.rho / 2)
        return (np.concatenate([half.g[:, :order + 1].ravel(), half.y[:order + 1]]),
                np.concatenate([full.g[:, :order + 1].ravel(), full.y[:order + 1]]))

    def branch_value_by_quadrature(self, index: int) -> np.ndarray:
        """v_alpha/dt at branch point `index` as the adaptive mean over its jet circle"""
        chart = self.branch_chart(index)

        def on_circle(angle):
            return self.chart_values(self.basis, chart, chart.radius * np.exp(1j * angle))
        value, _ = adaptive_gauss_legendre(on_circle, 0.0, 2 * np.pi, self.config.QUAD_TOL,
                                           label=f"jet circle {index}")
        return value / (2 * np.pi)

    def direction_jet(self, h: Differential, index: int) -> np.ndarray:
        """Taylor coefficients of h/dt at a branch point, memoised per label"""
        return self._direction_jets.get(
            (h.label, index), lambda: self.jet([h], self.branch_chart(index)).taylor(self.config.JET_ORDER)[0])

    @cached_property
    def branch_abel(self):
        """A(e_i) - A(e_0) for every branch point"""
        e0 = SurfacePoint(complex(self.curve.branch_points[0]), 0, branch=0)
        out = [np.zeros(self.curve.genus, dtype=complex)]
        for i in range(1, len(self.curve.branch_points)):
            out.append(self.abel_difference(e0, SurfacePoint(complex(self.curve.branch_points[i]), 0, branch=i)))
        return np.array(out)

    @cached_property
    def branch_cross_values(self) -> np.ndarray:
        """B(x_i, x_j) / (dt_i dt_j) for i != j, zero on the diagonal"""
        jets = self.branch_jets
        p = len(jets)
        out = np.zeros((p, p), dtype=complex)
        for i in range(p):
            for j in range(i + 1, p):
                dz = self.branch_abel[j] - self.branch_abel[i]
                out[i, j] = out[j, i] = complex(self.bergman_kernel(jets[i].values, jets[j].values, dz))
        return out

    def branch_jet_table(self):
        """The BranchJet table together with the cross values"""
        return self.branch_jets, self.branch_cross_values

    # ------------------------------------------------ kernels on branch circles

    def branch_circle(self, index: int):
        """(t, v_alpha/dt, v/dt, A(t) - A(e_i)) on the jet circle of branch point `index`"""
        def compute():
            chart = self.branch_chart(index)
            t = circle_points(chart.radius, self.config.JET_SAMPLES)
            return (t, self.chart_values(self.basis, chart, t), self.chart_values([self.v], chart, t)[0],
                    self.chart_abel(chart, t))
        return self._circles.get(index, compute)

    def branch_offset(self, x: SurfacePoint, index: int):
        """A(e_i) - A(x) along the canonical path; x must stay outside the jet circle"""
        chart = self.branch_chart(index)
        if abs(x.x - chart.center) <= chart.radius ** 2:
            raise EvaluationError(f"Kernel point {x.x:.6g} lies inside the jet circle of branch point {index}")
        center = SurfacePoint(complex(chart.center), 0, branch=index)
        return self._offsets.get((x, index), lambda: self.abel_difference(x, center))

    def kernel_on_circle(self, x: SurfacePoint, index: int):
        """B(x, t) / (dx dt) for t on the jet circle of branch point `index`"""
        t, gt, _, abel_t = self.branch_circle(index)
        gx = self.point_values(self.basis, x)
        dz = self.branch_offset(x, index)[:, None] + abel_t
        char = self.select_characteristic([gx, gt[:, 0], gt[:, len(t) // 2]])
        return self.bergman_kernel(gx[:, None] * np.ones_like(gt), gt, dz, char)

    def circle_residue(self, values, index: int) -> complex:
        """Residue at t = 0 of values sampled on the jet circle of branch point `index`"""
        t = self.branch_circle(index)[0]
        series = circle_jet(lambda _: values, abs(t[0]), order=0, laurent=1, samples=len(t))
        return complex(series.residue)
