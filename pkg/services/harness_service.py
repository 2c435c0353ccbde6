import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Optional

import mpmath
import numpy as np

from config import Config
from models.curve import SpectralCurve
from models.instance import InstanceSpec
from models.moduli import CoordinateDirection
from models.report import CheckResult, Report
from services.differential_service import DifferentialService
from services.instance_service import InstanceService
from services.moduli_service import ModuliService, scaled_spec
from services.surface_service import SurfaceService
from services.variation_service import VariationService, cycle_orders
from utils.errors import HarnessError, SpeclabError

logger = logging.getLogger(__name__)


# check-name prefix -> identity under test; the longest matching prefix wins
EQUATIONS = (
    ("build", "surface construction"),
    ("counts.", "Riemann-Hurwitz counts"),
    ("monodromy.", "monodromy product around all branch points"),
    ("omega.", "Riemann bilinear relations for the period matrix"),
    ("basis.", "a-normalization of the holomorphic differentials"),
    ("v.", "residue theorem for v"),
    ("theta.quasi-periodic", "theta quasi-periodicity"),
    ("theta.parity", "theta parity"),
    ("bidifferential.", "theta-function form of the Bergman bidifferential"),
    ("bidifferential.symmetric", "symmetry of the Bergman bidifferential"),
    ("bergman-reg.", "regularized Bergman kernel as a projective connection"),
    ("bilinear.second-kind", "bilinear relation for second-kind b-periods"),
    ("bilinear.third-kind", "bilinear relation for third-kind b-periods (Abel map)"),
    ("bilinear.reciprocity", "reciprocity of second-kind differentials"),
    ("jet.stability", "branch jets independent of the circle radius"),
    ("jet.quadrature", "branch-point values by circle quadrature"),
    ("elliptic.", "genus-one reduction"),
    ("direction.", "variation of v at fixed base point"),
    ("dm-cubic.", "period-matrix variation (cubic form)"),
    ("dm-cubic.forms", "pairing and single-residue forms of the period-matrix variation"),
    ("dm-cubic.symmetric", "total symmetry of the cubic form"),
    ("dm-cubic.euler", "homogeneity of the period matrix"),
    ("endpoint.", "variation of Abel integrals between zeros of v"),
    ("endpoint.reparam", "chart independence of the branch factors"),
    ("kernel.v", "variation of the normalized holomorphic differentials"),
    ("kernel.B", "variation of the Bergman bidifferential"),
    ("kernel.B-symmetric", "symmetry of the Bergman bidifferential variation"),
    ("prime-form.", "variation of the prime form"),
    ("prime-form.antisymmetric", "prime form antisymmetry"),
    ("prime-form.cross-derivative", "mixed log-derivative of the prime form equals B"),
    ("tau.chain-rule", "Bergman tau-function gradient"),
    ("tau.flat-residue", "residues in the flat coordinate"),
    ("tau.cross-partial", "closedness of d ln tau"),
    ("hessian.", "second variation of the period matrix"),
    ("hessian.symmetric", "symmetry of the second period-matrix variation"),
    ("prepotential.", "prepotential second derivatives"),
    ("hierarchy.", "multidifferential hierarchy identities"),
    ("hierarchy.Q", "variation of the Q hierarchy"),
    ("hierarchy.R", "variation of the R hierarchy"),
    ("hierarchy.q3-symmetric", "symmetry of Q_3"),
    ("hierarchy.Q-symmetric", "symmetry of the Q-hierarchy variation"),
    ("scaling.", "homogeneity under v -> lambda v"),
    ("coordinates.", "moduli coordinate count and residue theorem"),
    ("navigation.", "Newton navigation in moduli coordinates"),
    ("navigation.jacobian", "coordinate Jacobian against coefficient differences"),
    ("navigation.transport", "continuity of the period matrix under transport"),
)


def equation_for(name: str) -> str:
    matches = [(prefix, eq) for prefix, eq in EQUATIONS if name == prefix or name.startswith(prefix)]
    return max(matches, key=lambda m: len(m[0]))[1] if matches else ""


# eta = 2 xi + xi^3 as the alternative base coordinate at a branch point
def cubic_reparametrization(xi):
    return 2.0 + 3.0 * xi ** 2, 6.0 * xi


@dataclass(eq=False)
class SuiteContext:
    spec: InstanceSpec
    curve: SpectralCurve
    differentials: Optional[DifferentialService] = None
    variations: Optional[VariationService] = None
    points: list = field(default_factory=list)
    eps: Optional[float] = None
    tol_override: Optional[float] = None
    memo: dict = field(default_factory=dict)

    def tol(self, default: float) -> float:
        return default if self.tol_override is None else self.tol_override

    def cached(self, key, compute: Callable):
        if key not in self.memo:
            self.memo[key] = compute()
        return self.memo[key]

    @property
    def analytic(self):
        return self.differentials is not None


class HarnessService:
    """Acceptance suites, convergence sweeps and instance summaries"""

    SUITE_ORDER = ('surface', 'dm-cubic', 'kernels', 'prime-form', 'tau', 'hessian', 'hierarchy', 'scaling')

    def __init__(self, instance_service: InstanceService = None, surface_service: SurfaceService = None,
                 moduli_service: ModuliService = None):
        self.config = Config()
        self.instances = instance_service or InstanceService()
        self.surfaces = surface_service or SurfaceService(self.instances)
        self.moduli = moduli_service or ModuliService(self.surfaces)

    # ---------------------------------------------------------------- context

    def build_context(self, spec: InstanceSpec, eps: float = None, tol: float = None) -> SuiteContext:
        curve = self.surfaces.build_surface(spec)
        ctx = SuiteContext(spec, curve, eps=eps, tol_override=tol)
        if curve.n == 2 and curve.genus > 0:
            ctx.differentials = self.moduli.differentials_for(curve)
            ctx.variations = VariationService(ctx.differentials)
            ctx.points = ctx.differentials.sample_points(self.config.SAMPLE_POINTS)
        return ctx

    def _check(self, report: Report, ctx: SuiteContext, name: str, formula: str, evaluate: Callable,
               tol: float, gating: bool = True, absolute: bool = False, note: str = "", equation: str = None):
        equation = equation or equation_for(name)
        start = time.perf_counter()
        try:
            lhs, rhs = evaluate()
        except Exception as e:
            logger.error(f"Failed to run check {name}: {str(e)}")
            return report.add(CheckResult.failure(name, formula, str(e), gating, equation))
        result = CheckResult.compare(name, formula, lhs, rhs, ctx.tol(tol), gating, absolute,
                                     time.perf_counter() - start, note, equation)
        if result.passed:
            logger.debug(f"{name}: rel {result.rel_err:.2e} (tol {result.tol:.0e})")
        else:
            logger.warning(f"{name} failed: rel {result.rel_err:.2e}, abs {result.abs_err:.2e} "
                           f"(tol {result.tol:.0e})")
        return report.add(result)

    def _fd(self, ctx: SuiteContext, functional: Callable, direction: CoordinateDirection, log: bool = False):
        return self.moduli.fd_derivative(ctx.curve, functional, direction, ctx.eps, log, ctx.differentials).value

    def _dOmega(self, ctx: SuiteContext, direction: CoordinateDirection, both: bool = False):
        pair = ctx.cached(('dOmega', direction.name),
                          lambda: ctx.variations.vary_period_matrix(direction, both=True))
        return pair if both else pair[0]

    def _a_directions(self, ctx: SuiteContext):
        return [CoordinateDirection('A', index=a) for a in range(ctx.curve.genus)]

    # ------------------------------------------------------------------ suites

    def run_suite(self, instance: str, suite: str, tol: float = None, eps: float = None) -> Report:
        """Run one acceptance suite (or all of them) on an instance label or file"""
        if suite not in self.config.SUITES:
            raise HarnessError(f"unknown suite {suite!r}; valid suites: {', '.join(self.config.SUITES)}")
        spec = self.instances.load(instance)
        report = Report(spec.label, suite)
        try:
            ctx = self.build_context(spec, eps, tol)
        except SpeclabError as e:
            logger.error(f"Failed to build {spec.label}: {str(e)}")
            report.add(CheckResult.failure("build", "surface construction", str(e), equation=equation_for("build")))
            return report

        names = self.SUITE_ORDER if suite == 'all' else (suite,)
        for name in names:
            logger.info(f"Running suite {name} on {spec.label}")
            if name != 'surface' and not ctx.analytic:
                logger.info(f"Suite {name} needs an n = 2 curve of positive genus; skipped for {spec.label}")
                continue
            getattr(self, f"_suite_{name.replace('-', '_')}")(ctx, report)
        self.moduli.forget(ctx.curve)
        logger.info(f"{spec.label}/{suite}: {len(report.checks)} checks, "
                    f"{len(report.failures)} gating failures")
        return report

    def _suite_surface(self, ctx: SuiteContext, report: Report):
        curve = ctx.curve
        counts = curve.counts
        self._check(report, ctx, "counts.branch-points", "p = n(n-1)(K-2)",
                    lambda: (len(curve.branch_points), counts.branch_points), 0, absolute=True)
        self._check(report, ctx, "counts.zeros", "r = 2g - 2 + nK",
                    lambda: (len(curve.zeros), counts.zeros), 0, absolute=True)
        if curve.monodromy:
            self._check(report, ctx, "monodromy.product", "product of branch-point monodromies = id",
                        lambda: (SurfaceService.compose([p for _, p in curve.monodromy]), list(range(curve.n))),
                        0, absolute=True)
        if not ctx.analytic:
            return
        ds = ctx.differentials
        genus = curve.genus
        self._check(report, ctx, "omega.symmetric", "Omega = Omega^T",
                    lambda: (ds.omega, ds.omega.T), self.config.TOL_SURFACE)

        def positive():
            smallest = float(np.min(np.linalg.eigvalsh(0.5 * (ds.omega.imag + ds.omega.imag.T))))
            return float(smallest > 0), 1.0
        self._check(report, ctx, "omega.im-positive", "Im Omega > 0", positive, 0, absolute=True)
        self._check(report, ctx, "basis.a-normalized", "int_{a_b} v_a = delta_ab",
                    lambda: (ds.a_periods(ds.basis), np.eye(genus)), self.config.TOL_SURFACE, absolute=True)
        self._check(report, ctx, "v.residue-sum", "sum of residues of v = 0",
                    lambda: (np.sum(ctx.variations.residues_of_v()), 0.0), self.config.TOL_IDENTITY, absolute=True)

        p = ctx.points
        for k, (x, y) in enumerate([(p[0], p[1]), (p[2], p[3])]):
            self._check(report, ctx, f"bidifferential.algebraic.{k}", "B from theta = algebraic B",
                        lambda x=x, y=y: (ds.bidifferential(x, y), ds.hyperelliptic_bidifferential(x, y)),
                        self.config.TOL_ORACLE)
            self._check(report, ctx, f"bidifferential.symmetric.{k}", "B(x, y) = B(y, x)",
                        lambda x=x, y=y: (ds.bidifferential(x, y), ds.bidifferential(y, x)),
                        self.config.TOL_ORACLE)
        self._check(report, ctx, "bergman-reg.limit", "(S_B - S_v)/6 = lim B - v v/(int v)^2",
                    lambda: (ds.bergman_reg(p[0]), ds.bergman_reg_limit(p[0])), self.config.TOL_ORACLE)
        self._theta_checks(ctx, report)
        self._bilinear_checks(ctx, report)
        self._jet_checks(ctx, report)
        if genus == 1:
            self._elliptic_checks(ctx, report)

    def _theta_checks(self, ctx: SuiteContext, report: Report):
        ds = ctx.differentials
        omega = ds.omega
        genus = ctx.curve.genus
        z = ds.abel_difference(ctx.points[0], ctx.points[1])
        odd = ds.primary_characteristic[0]

        for label, char in (("zero", ()), ("odd", odd)):
            d1, d2 = (np.zeros(genus), np.zeros(genus)) if label == "zero" else char

            def quasi_periodic(char=char, d1=d1, d2=d2):
                base = complex(ds.theta(z, char))
                lhs, rhs = [], []
                for k in range(genus):
                    unit = np.eye(genus)[k]
                    lhs.append(complex(ds.theta(z + unit, char)))
                    rhs.append(np.exp(2j * np.pi * d1[k]) * base)
                    lhs.append(complex(ds.theta(z + omega @ unit, char)))
                    rhs.append(np.exp(-1j * np.pi * omega[k, k] - 2j * np.pi * (z[k] + d2[k])) * base)
                return np.array(lhs), np.array(rhs)
            self._check(report, ctx, f"theta.quasi-periodic.{label}",
                        "theta[d](z + n + Omega m) = exp(2 pi i d'n - pi i mOm - 2 pi i m(z + d'')) theta[d](z)",
                        quasi_periodic, self.config.TOL_IDENTITY)

            sign = -1.0 if label == "odd" else 1.0
            self._check(report, ctx, f"theta.parity.{label}", "theta[d](-z) = (-1)^(4 d'd'') theta[d](z)",
                        lambda char=char, sign=sign: (complex(ds.theta(-z, char)), sign * complex(ds.theta(z, char))),
                        self.config.TOL_IDENTITY)

    def _bilinear_checks(self, ctx: SuiteContext, report: Report):
        ds = ctx.differentials
        poles = ctx.curve.poles
        second = [(j, s) for j, pole in enumerate(poles) if pole.k >= 2 for s in range(2)]
        for j, s in second:
            for order in range(2, poles[j].k + 1):
                self._check(report, ctx, f"bilinear.second-kind.{j}.{s}.{order}",
                            "int_{b_a} w = 2 pi i c_{l-2}(v_a) / (l - 1)",
                            lambda j=j, s=s, order=order: (ds.cycle_integrals([ds.second_kind(j, s, order)])[1][0],
                                                           ds.second_kind_b_periods(j, s, order)),
                            self.config.TOL_ORACLE)
        for j in range(len(poles)):
            for s in range(2):
                if (j, s) == (0, 0):
                    continue
                self._check(report, ctx, f"bilinear.third-kind.{j}.{s}",
                            "int_b u / 2 pi i = A(y_j^(s)) - A(y_0^(0)) mod lattice",
                            lambda j=j, s=s: (ds.third_kind_abel_defect(j, s), np.zeros(ctx.curve.genus)),
                            self.config.TOL_ORACLE, absolute=True)
        for k in range(1, len(second)):
            first, other = second[0], second[k]

            def reciprocity(first=first, other=other):
                w_first = ds.second_kind(*first, 2)
                w_other = ds.second_kind(*other, 2)
                return (complex(ds.pole_laurent([w_first], *other).value[0]),
                        complex(ds.pole_laurent([w_other], *first).value[0]))
            self._check(report, ctx, f"bilinear.reciprocity.{first[0]}.{first[1]}.{other[0]}.{other[1]}",
                        "w_P / dt at Q = w_Q / dt at P", reciprocity, self.config.TOL_ORACLE)

    def _jet_checks(self, ctx: SuiteContext, report: Report):
        ds = ctx.differentials
        for index in range(len(ctx.curve.branch_points)):
            self._check(report, ctx, f"jet.stability.{index}", "jet coefficients on rho/2 = on rho",
                        lambda index=index: ds.branch_jet_stability(index), self.config.TOL_JET_STABILITY)
            self._check(report, ctx, f"jet.quadrature.{index}", "g_a(x_i) = mean of v_a/dt over the jet circle",
                        lambda index=index: (ds.branch_value_by_quadrature(index), ds.branch_jets[index].values),
                        self.config.TOL_ORACLE)

    def _elliptic_checks(self, ctx: SuiteContext, report: Report):
        ds = ctx.differentials
        curve = ctx.curve
        tau = complex(ds.omega[0, 0])

        def j_invariant():
            lam = np.concatenate([curve.discriminant, np.zeros(5)])[:5]
            a, b, c, d, e = lam[4], lam[3] / 4, lam[2] / 6, lam[1] / 4, lam[0]
            I = a * e - 4 * b * d + 3 * c ** 2
            J = a * c * e + 2 * b * c * d - a * d ** 2 - e * b ** 2 - c ** 3
            return complex(1728 * mpmath.kleinj(tau)), 1728 * I ** 3 / (I ** 3 - 27 * J ** 2)
        self._check(report, ctx, "elliptic.j-invariant", "j(Omega) = 1728 I^3/(I^3 - 27 J^2)",
                    j_invariant, self.config.TOL_ELLIPTIC)

        def a_period():
            e = [mpmath.mpc(z.real, z.imag) for z in curve.branch_points]
            lead = mpmath.sqrt(mpmath.mpc(curve.discriminant[-1].real, curve.discriminant[-1].imag))
            mid = (e[2] + e[3]) / 2

            def integrand(theta):
                x = e[0] + (e[1] - e[0]) * (1 - mpmath.cos(theta)) / 2
                d = x - mid
                return 1 / (lead * d * mpmath.sqrt((x - e[2]) * (x - e[3]) / d ** 2))
            return abs(ds.period_data.raw_a[0, 0]), float(abs(2 * mpmath.quad(integrand, [0, mpmath.pi])))
        self._check(report, ctx, "elliptic.a-period", "|int_a dx/w| = 2 |int_0^pi dtheta / sqrt(...)|",
                    a_period, self.config.TOL_ELLIPTIC)

        def theta_value():
            z = 0.3 + 0.1j
            q = mpmath.exp(1j * mpmath.pi * tau)
            return complex(ds.theta(np.array([z]))), complex(mpmath.jtheta(3, mpmath.pi * z, q))
        self._check(report, ctx, "elliptic.theta", "theta(z | tau) = theta_3(pi z, q)",
                    theta_value, self.config.TOL_ELLIPTIC)

    def _suite_dm_cubic(self, ctx: SuiteContext, report: Report):
        ds, vs, curve = ctx.differentials, ctx.variations, ctx.curve
        points = ctx.points
        directions = self.moduli.directions(curve)
        path_zeros = [i for i in range(len(curve.zeros)) if i != curve.root_index]
        root = curve.root_index

        def v_at_points(d):
            return np.array([d.point_values([d.v], p)[0] for p in points])

        def path_integrals(d):
            return np.array([d.integrate_over([d.v], d.curve.basis.zero_paths[i])[0] for i in path_zeros])

        for direction in directions:
            name = direction.name

            def direction_check(direction=direction):
                h = vs.direction_differential(direction)
                return np.array([ds.point_values([h], p)[0] for p in points]), self._fd(ctx, v_at_points, direction)
            self._check(report, ctx, f"direction.{name}", "dv/dz = h_z at fixed x", direction_check,
                        self.config.TOL_DIRECTION)

            self._check(report, ctx, f"dm-cubic.forms.{name}", "pairing form = single-residue form",
                        lambda direction=direction: self._dOmega(ctx, direction, both=True),
                        self.config.TOL_FORMS)
            self._check(report, ctx, f"dm-cubic.{name}",
                        "dOmega_ab = -2 pi i sum res v_a v_b h / (dxi d(v/dxi))",
                        lambda direction=direction: (self._dOmega(ctx, direction),
                                                     self._fd(ctx, lambda d: d.omega, direction)),
                        self.config.TOL_DM_CUBIC)

            def endpoint_check(direction=direction):
                h = vs.direction_differential(direction)
                corrections = [vs.endpoint_correction(h, i) - vs.endpoint_correction(h, root) for i in path_zeros]
                formula = [complex(ds.integrate_over([h], curve.basis.zero_paths[i])[0]) + c
                           for i, c in zip(path_zeros, corrections)]
                return np.array(formula), self._fd(ctx, path_integrals, direction)
            self._check(report, ctx, f"endpoint.{name}", "d int_{x_r}^{x_i} v = int h + branch corrections",
                        endpoint_check, self.config.TOL_ENDPOINT)

            def reparam_check(direction=direction):
                h = vs.direction_differential(direction)
                indices = range(len(curve.branch_points))
                return (np.array([vs.branch_factor(h, i) for i in indices]),
                        np.array([vs.branch_factor(h, i, cubic_reparametrization) for i in indices]))
            self._check(report, ctx, f"endpoint.reparam.{name}", "h/d ln(v/dxi) independent of xi",
                        reparam_check, self.config.TOL_INVARIANCE)

        def symmetry():
            tensor = np.stack([self._dOmega(ctx, d) for d in self._a_directions(ctx)], axis=-1)
            perms = list(permutations(range(3)))
            return np.stack([tensor] * len(perms)), np.stack([np.transpose(tensor, p) for p in perms])
        self._check(report, ctx, "dm-cubic.symmetric", "dOmega_ab/dA_c symmetric in (a, b, c)", symmetry,
                    self.config.TOL_SYMMETRY)

        def euler():
            coords = self.moduli.base_coordinates(curve, ds)
            terms = [coords.value_of(d) * self._dOmega(ctx, d) for d in directions]
            scale = sum(float(np.max(np.abs(t))) for t in terms)
            return sum(terms) / max(scale, 1e-300), np.zeros_like(terms[0])
        self._check(report, ctx, "dm-cubic.euler", "sum_z z dOmega/dz = 0", euler, self.config.TOL_EULER,
                    absolute=True, note="normalised by sum |z dOmega/dz|")

    def _kernel_pairs(self, ctx: SuiteContext):
        p = ctx.points
        return [(p[0], p[1]), (p[2], p[3]), (p[4], p[0])]

    def _suite_kernels(self, ctx: SuiteContext, report: Report):
        vs = ctx.variations
        genus = ctx.curve.genus
        for direction in self.moduli.directions(ctx.curve):
            name = direction.name
            for k, (x, y) in enumerate(self._kernel_pairs(ctx)):
                self._check(report, ctx, f"kernel.v.{name}.{k}", "dv_a(x) = -sum bf res v_a(t) B(t, x)/v(t)",
                            lambda direction=direction, x=x: (
                                np.array([vs.vary_kernel('v', direction, x, alpha=a) for a in range(genus)]),
                                self._fd(ctx, lambda d: d.point_values(d.basis, x), direction)),
                            self.config.TOL_KERNEL)
                self._check(report, ctx, f"kernel.B.{name}.{k}", "dB(x, y) = -sum bf res B(x, t) B(t, y)/v(t)",
                            lambda direction=direction, x=x, y=y: (
                                vs.vary_kernel('B', direction, x, y),
                                self._fd(ctx, lambda d: d.bidifferential(x, y), direction)),
                            self.config.TOL_KERNEL)
                self._check(report, ctx, f"kernel.B-symmetric.{name}.{k}", "dB(x, y) = dB(y, x)",
                            lambda direction=direction, x=x, y=y: (vs.vary_kernel('B', direction, x, y),
                                                                   vs.vary_kernel('B', direction, y, x)),
                            self.config.TOL_INVARIANCE)

    def _suite_prime_form(self, ctx: SuiteContext, report: Report):
        ds, vs = ctx.differentials, ctx.variations
        pairs = [(x, y) for i, x in enumerate(ctx.points) for y in ctx.points[i + 1:]]
        self._check(report, ctx, "prime-form.antisymmetric", "E(x, y) = -E(y, x)",
                    lambda: (np.array([ds.prime_form(x, y) for x, y in pairs]),
                             np.array([-ds.prime_form(y, x) for x, y in pairs])),
                    self.config.TOL_IDENTITY)
        for k, (x, y) in enumerate(self._kernel_pairs(ctx)):
            self._check(report, ctx, f"prime-form.cross-derivative.{k}", "d_x d_y ln E(x, y) = B(x, y)",
                        lambda x=x, y=y: (ds.prime_form_cross_derivative(x, y), ds.bidifferential(x, y)),
                        self.config.TOL_CROSS_DERIVATIVE)
        for direction in self.moduli.directions(ctx.curve):
            for k, (x, y) in enumerate(self._kernel_pairs(ctx)):
                self._check(report, ctx, f"prime-form.{direction.name}.{k}",
                            "d ln E(x, y) = -1/2 sum bf res (d_t ln E(x, t)/E(y, t))^2 / v(t)",
                            lambda direction=direction, x=x, y=y: (
                                vs.vary_kernel('lnE', direction, x, y),
                                self._fd(ctx, lambda d: d.prime_form(x, y), direction, log=True)),
                            self.config.TOL_KERNEL)

    def _suite_tau(self, ctx: SuiteContext, report: Report):
        ds, vs, curve = ctx.differentials, ctx.variations, ctx.curve
        residues = vs.residues_of_v()
        residue_free = float(np.max(np.abs(residues))) <= 1e-8 * max(1.0, float(np.max(np.abs(residues))))
        note = "" if residue_free else "exploratory: v has nonzero residues"
        gating = residue_free
        for direction in self._a_directions(ctx):
            self._check(report, ctx, f"tau.chain-rule.{direction.name}",
                        "d ln tau/dA = residues of B_reg/v at zeros of v",
                        lambda direction=direction: (vs.tau_gradient(direction, allow_residues=not residue_free),
                                                     vs.tau_chain_rule(direction)),
                        self.config.TOL_TAU, gating=gating, note=note)
        first = ds.basis[0]
        for index, zero in enumerate(curve.zeros):
            if zero.kind != 'regular':
                continue
            self._check(report, ctx, f"tau.flat-residue.x{index}", "res v_a / int_{x_i}^x v by series = by quadrature",
                        lambda index=index: (ds.flat_residue(first, index), ds.flat_residue_by_quadrature(first, index)),
                        self.config.TOL_ORACLE)
        a_dirs = self._a_directions(ctx)
        for g in range(len(a_dirs)):
            for d in range(g + 1, len(a_dirs)):
                def cross(g=a_dirs[g], d=a_dirs[d]):
                    along_g = self._fd(ctx, lambda s: VariationService(s).tau_gradient(
                        d, allow_residues=not residue_free), g)
                    along_d = self._fd(ctx, lambda s: VariationService(s).tau_gradient(
                        g, allow_residues=not residue_free), d)
                    return along_g, along_d
                self._check(report, ctx, f"tau.cross-partial.{a_dirs[g].name}.{a_dirs[d].name}",
                            "d^2 ln tau/dA_g dA_d symmetric", cross, self.config.TOL_TAU, gating=gating, note=note)

    def _suite_hessian(self, ctx: SuiteContext, report: Report):
        vs = ctx.variations
        tensor = lambda: ctx.cached('hessian', vs.period_hessian_tensor)

        def symmetry():
            T = tensor()
            perms = list(permutations(range(4)))
            return np.stack([T] * len(perms)), np.stack([np.transpose(T, p) for p in perms])
        self._check(report, ctx, "hessian.symmetric", "d^2 Omega_ab/dA_c dA_d symmetric in all indices",
                    symmetry, self.config.TOL_HESSIAN_SYMMETRY)
        a_dirs = self._a_directions(ctx)
        for g in a_dirs:
            for d in a_dirs:
                self._check(report, ctx, f"hessian.{g.name}.{d.name}",
                            "second derivative of Omega from the branch jet table",
                            lambda g=g, d=d: (tensor()[:, :, g.index, d.index],
                                              self._fd(ctx, lambda s: VariationService(s).vary_period_matrix(d), g)),
                            self.config.TOL_HESSIAN)
        for a in a_dirs:
            self._check(report, ctx, f"prepotential.{a.name}", "dB_c/dA_a = Omega_ac",
                        lambda a=a: (self._fd(ctx, lambda s: s.cycle_integrals([s.v])[1][0], a),
                                     ctx.differentials.omega[a.index]),
                        self.config.TOL_PREPOTENTIAL)

    def _suite_hierarchy(self, ctx: SuiteContext, report: Report):
        ds, vs = ctx.differentials, ctx.variations
        x, y, z = ctx.points[:3]
        self._check(report, ctx, "hierarchy.q3-symmetric", "Q_3 symmetric in its arguments",
                    lambda: (np.array([vs.q_multidiff(list(p)) for p in permutations([x, y, z])]),
                             np.full(6, vs.q_multidiff([x, y, z]))), self.config.TOL_FORMS)
        self._check(report, ctx, "hierarchy.r2", "R_2 = B",
                    lambda: (vs.r_multidiff([x, y]), ds.bidifferential(x, y)), self.config.TOL_IDENTITY)
        self._check(report, ctx, "hierarchy.r3", "R_3(x, z, y) = B(x, z) B(z, y)/v(z)",
                    lambda: (vs.r_multidiff([x, z, y]),
                             ds.bidifferential(x, z) * ds.bidifferential(z, y) / ds.point_values([ds.v], z)[0]),
                    self.config.TOL_IDENTITY)
        self._check(report, ctx, "hierarchy.q4-cycles", "Q_4 has (4-1)!/2 cycles",
                    lambda: (len(list(cycle_orders(4))), 3), 0, absolute=True)
        for direction in self._a_directions(ctx):
            name = direction.name
            self._check(report, ctx, f"hierarchy.Q2.{name}", "dQ_n = -sum bf res Q_{n+1} - Q_n sum h/v",
                        lambda direction=direction: (
                            vs.fixed_point_variation(2, direction, [x, y], 'Q'),
                            self._fd(ctx, lambda s: VariationService(s).q_multidiff([x, y]), direction)),
                        self.config.TOL_HIERARCHY)
            self._check(report, ctx, f"hierarchy.R3.{name}", "dR_n = -sum bf res R_{n+1} - R_n sum_middle h/v",
                        lambda direction=direction: (
                            vs.fixed_point_variation(3, direction, [x, z, y], 'R'),
                            self._fd(ctx, lambda s: VariationService(s).r_multidiff([x, z, y]), direction)),
                        self.config.TOL_HIERARCHY)
            self._check(report, ctx, f"hierarchy.R2-kernel.{name}", "R-variation at n = 2 = dB",
                        lambda direction=direction: (vs.hierarchy_variation(2, direction, [x, y], 'R'),
                                                     vs.vary_kernel('B', direction, x, y)),
                        self.config.TOL_IDENTITY)
            self._check(report, ctx, f"hierarchy.Q-symmetric.{name}", "Q-variation symmetric in its points",
                        lambda direction=direction: (vs.hierarchy_variation(2, direction, [x, y]),
                                                     vs.hierarchy_variation(2, direction, [y, x])),
                        self.config.TOL_INVARIANCE)

    def _suite_scaling(self, ctx: SuiteContext, report: Report):
        ds, curve, moduli = ctx.differentials, ctx.curve, self.moduli
        factor = self.config.SCALING_FACTOR
        coords = lambda: moduli.base_coordinates(curve, ds)
        scaled = lambda: ctx.cached('scaled', lambda: moduli.differentials_for(
            self.surfaces.build_surface(scaled_spec(ctx.spec, factor), reference=curve), ds))
        x, y = ctx.points[:2]

        self._check(report, ctx, "scaling.coordinates", "(A, C) -> lambda (A, C)",
                    lambda: (moduli.coordinates_of(scaled().curve, scaled()).values, factor * coords().values),
                    self.config.TOL_FORMS)
        self._check(report, ctx, "scaling.omega", "Omega invariant under v -> lambda v",
                    lambda: (scaled().omega, ds.omega), self.config.TOL_FORMS)
        self._check(report, ctx, "scaling.bidifferential", "B invariant under v -> lambda v",
                    lambda: (scaled().bidifferential(x, y), ds.bidifferential(x, y)), self.config.TOL_FORMS)
        self._check(report, ctx, "coordinates.count", "number of coordinates = dim",
                    lambda: (len(coords()), curve.counts.dim), 0, absolute=True)
        self._check(report, ctx, "coordinates.residue-sum", "sum of all C^(s),1 = 0",
                    lambda: (coords().residue_sum() / max(1.0, float(np.max(np.abs(coords().values)))), 0.0),
                    self.config.TOL_IDENTITY, absolute=True)

        def zero_step():
            moved = moduli.step_to(curve, coords())
            return moduli.coordinates_of(moved).values, coords().values
        self._check(report, ctx, "navigation.zero-step", "step_to(z) = z", zero_step, 1e-13)

        def chart():
            target = coords().shifted(coords().directions[0], self.config.CHART_STEP
                                      * max(1.0, float(np.max(np.abs(coords().values)))))
            moved = moduli.step_to(curve, target, label=f"{curve.label}[chart]")
            return moduli.coordinates_of(moved).values, target.values
        self._check(report, ctx, "navigation.chart", "coordinates_of(step_to(z)) = z", chart, self.config.TOL_CHART)

        for direction in self._a_directions(ctx):
            self._check(report, ctx, f"navigation.a-periods.{direction.name}", "dA_b/dA_c = delta_bc",
                        lambda direction=direction: (
                            self._fd(ctx, lambda s: s.a_periods([s.v])[0], direction),
                            np.eye(curve.genus)[direction.index]),
                        self.config.TOL_SURFACE, absolute=True)

        def jacobian():
            jac = moduli.jacobian(curve, ds)
            columns = [moduli.coefficient_fd(curve, lambda s: moduli.coordinates_of(s.curve, s).values,
                                             ell, power, ctx.eps, ds).value for ell, power in jac.unknowns]
            moduli.forget(curve, perturbations_only=True)
            return jac.matrix, np.stack(columns, axis=1)
        self._check(report, ctx, "navigation.jacobian", "Jacobian columns = coefficient finite differences",
                    jacobian, self.config.TOL_JACOBIAN)

        def transport():
            current, current_ds = curve, ds
            scale = max(1.0, float(np.max(np.abs(coords().values))))
            jumps = []
            for k in range(self.config.TRANSPORT_STEPS):
                here = moduli.base_coordinates(current, current_ds)
                target = here.shifted(here.directions[0], self.config.TRANSPORT_STEP * scale)
                moved = moduli.step_to(current, target, label=f"{curve.label}[transport {k + 1}]")
                moved_ds = moduli.differentials_for(moved, current_ds)
                jumps.append(float(np.max(np.abs(moved_ds.omega - current_ds.omega))))
                if current is not curve:
                    moduli.forget(current)
                current, current_ds = moved, moved_ds
            moduli.forget(current)
            return max(jumps), 0.0
        self._check(report, ctx, "navigation.transport", "|dOmega| per substep stays small", transport,
                    self.config.TOL_TRANSPORT, absolute=True)

    # ------------------------------------------------------------------ sweep

    def sweep_functionals(self, ctx: SuiteContext, direction: CoordinateDirection) -> dict:
        """name -> (functional on a DifferentialService, residue-formula value, log flag)"""
        vs = ctx.variations
        x, y = ctx.points[:2]
        genus = ctx.curve.genus
        return {
            'omega': (lambda s: s.omega, lambda: vs.vary_period_matrix(direction), False),
            'v': (lambda s: s.point_values(s.basis, x),
                  lambda: np.array([vs.vary_kernel('v', direction, x, alpha=a) for a in range(genus)]), False),
            'B': (lambda s: s.bidifferential(x, y), lambda: vs.vary_kernel('B', direction, x, y), False),
            'lnE': (lambda s: s.prime_form(x, y), lambda: vs.vary_kernel('lnE', direction, x, y), True),
            'Q2': (lambda s: VariationService(s).q_multidiff([x, y]),
                   lambda: vs.fixed_point_variation(2, direction, [x, y]), False),
        }

    def sweep_epsilon(self, instance: str, functional: str, coordinate: str, eps_list, out: str = None) -> list:
        """Central-difference error against the residue formula for a list of steps"""
        eps_list = sorted((float(e) for e in eps_list), reverse=True)
        if not eps_list:
            raise HarnessError("empty eps list")
        spec = self.instances.load(instance)
        ctx = self.build_context(spec)
        if not ctx.analytic:
            raise HarnessError(f"sweep needs an n = 2 curve of positive genus, got {spec.label}")
        try:
            direction = CoordinateDirection.parse(coordinate)
        except ValueError as e:
            raise HarnessError(str(e))
        if direction not in self.moduli.directions(ctx.curve):
            raise HarnessError(f"{coordinate} is not a coordinate of {spec.label}")
        functionals = self.sweep_functionals(ctx, direction)
        if functional not in functionals:
            raise HarnessError(f"unknown functional {functional!r}; choose from {', '.join(functionals)}")
        evaluate, formula, log = functionals[functional]
        exact = np.asarray(formula())
        pick = np.unravel_index(int(np.argmax(np.abs(exact))), exact.shape) if exact.ndim else ()
        z = self.moduli.base_coordinates(ctx.curve, ctx.differentials).value_of(direction)
        scale = max(1.0, abs(z))

        rows = []
        low, high = self.config.CONVERGENCE_RATIO
        for eps in eps_list:
            fd = np.asarray(self.moduli.central_difference(ctx.curve, evaluate, direction, eps * scale, log,
                                                           ctx.differentials))
            err = float(np.max(np.abs(fd - exact)))
            row = {"eps": eps, "fd_re": float(fd[pick].real), "fd_im": float(fd[pick].imag),
                   "formula_re": float(exact[pick].real), "formula_im": float(exact[pick].imag),
                   "abs_err": err, "ratio": "", "flag": ""}
            if rows:
                prev = rows[-1]
                # error ratio normalised to one halving of eps
                ratio = (prev["abs_err"] / err) ** (math.log(2) / math.log(prev["eps"] / eps)) if err > 0 else math.inf
                row["ratio"] = ratio
                row["flag"] = "ok" if low <= ratio <= high else ("noise-floor" if ratio < low else "irregular")
            rows.append(row)
            logger.info(f"sweep {functional}/{coordinate} eps={eps:.1e}: err {err:.3e} {row['flag']}")

        if out:
            with open(out, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
                writer.writeheader()
                writer.writerows(rows)
            logger.info(f"Wrote {len(rows)} sweep rows to {out}")
        return rows

    # --------------------------------------------------------------- describe

    def describe(self, instance: str, dump: str = None) -> dict:
        """Counts, branch points, zeros and genericity of an instance"""
        spec = self.instances.load(instance)
        counts = self.instances.derived_counts(spec)
        report = self.instances.validate_genericity(spec)
        summary = {
            "instance": spec.label,
            "source": spec.source,
            "counts": counts.as_dict(),
            "poles": [{"x": [p.x.real, p.x.imag], "k": p.k} for p in spec.poles],
            "genericity": {"pass": report.passed,
                           "failures": [{"message": m, "locations": [[z.real, z.imag] for z in locs]}
                                        for m, locs in report.failures]},
        }
        if not report.passed:
            logger.warning(f"{spec.label} is not generic; surface not built")
            return summary
        curve = self.surfaces.build_surface(spec)
        summary["branch_points"] = [[complex(e).real, complex(e).imag] for e in curve.branch_points]
        summary["zeros"] = [{"x": [z.point.x.real, z.point.x.imag], "sheet": z.point.sheet, "kind": z.kind}
                            for z in curve.zeros]
        summary["root_zero"] = curve.root_index
        summary["monodromy"] = [{"branch_point": i, "permutation": list(p)} for i, p in curve.monodromy]
        if dump:
            diagnostic = dict(summary)
            if curve.basis is not None:
                contours = list(curve.basis.a_cycles) + list(curve.basis.gap_cycles) + list(curve.basis.zero_paths)
                diagnostic["contours"] = {c.label: [[x.real, x.imag, sheet] for x, sheet in c.polyline()]
                                          for c in contours}
            with open(dump, "w", encoding="utf-8") as fh:
                json.dump(diagnostic, fh, indent=2)
            logger.info(f"Wrote diagnostics for {spec.label} to {dump}")
        return summary
