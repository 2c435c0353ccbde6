import logging
from typing import Callable

import numpy as np

from config import Config
from models.curve import SpectralCurve
from models.differential import Differential, RationalTerm
from models.instance import InstanceSpec
from models.moduli import CoordinateDirection, CoordJacobian, FDResult, ModuliPoint
from services.differential_service import DifferentialService
from services.surface_service import SurfaceService
from utils.errors import LinearAlgebraError, NavigationError, SpeclabError, wrap_failure
from utils.memo import MemoStore
from utils.numerics import log_near_one, solve_dense

logger = logging.getLogger(__name__)


def scaled_spec(spec: InstanceSpec, factor: complex) -> InstanceSpec:
    """Q_ell -> factor^ell Q_ell, which multiplies v by factor"""
    numerators = [factor ** (ell + 1) * np.asarray(N) for ell, N in enumerate(spec.numerators)]
    return spec.with_numerators(numerators, f"{spec.label}*{factor:g}")


class ModuliService:
    """Moduli coordinates (A, C) of a built curve and Newton navigation in them"""

    def __init__(self, surface_service: SurfaceService = None):
        self.config = Config()
        self.surfaces = surface_service or SurfaceService()
        self._bases = MemoStore()
        self._perturbed = MemoStore()

    # ------------------------------------------------------------ coordinates

    def directions(self, curve: SpectralCurve) -> tuple:
        """A_0 .. A_{g-1}, then C_j^(s),ell pole-major without the dependent C0.0.1"""
        out = [CoordinateDirection('A', index=a) for a in range(curve.genus)]
        for j, pole in enumerate(curve.poles):
            for s in range(curve.n):
                for ell in range(1, pole.k + 1):
                    direction = CoordinateDirection('C', pole=j, sheet=s, order=ell)
                    if not direction.is_dependent:
                        out.append(direction)
        return tuple(out)

    def differentials_for(self, curve: SpectralCurve, reference: DifferentialService = None) -> DifferentialService:
        return DifferentialService(curve, self.surfaces, reference)

    @wrap_failure(NavigationError, "compute moduli coordinates")
    def coordinates_of(self, curve: SpectralCurve, differentials: DifferentialService = None) -> ModuliPoint:
        ds = differentials or self.differentials_for(curve)
        directions = self.directions(curve)
        a = ds.a_periods([ds.v])[0]
        laurent = {(j, s): ds.pole_laurent([ds.v], j, s)
                   for j in range(len(curve.poles)) for s in range(curve.n)}
        values = []
        for d in directions:
            if d.kind == 'A':
                values.append(a[d.index])
            else:
                values.append(laurent[(d.pole, d.sheet)].coefficient(-d.order)[0])
        dependent = laurent[(0, 0)].coefficient(-1)[0]
        return ModuliPoint(directions, np.array(values, dtype=complex), complex(dependent))

    # ------------------------------------------------------------ coefficients

    def coefficient_unknowns(self, curve: SpectralCurve) -> tuple:
        return tuple((ell, power) for ell in range(1, curve.n + 1)
                     for power in range(len(curve.numerators[ell - 1])))

    def flatten(self, spec: InstanceSpec) -> np.ndarray:
        return np.concatenate([np.asarray(N, dtype=complex) for N in spec.numerators])

    def unflatten(self, spec: InstanceSpec, values) -> list:
        out, start = [], 0
        for N in spec.numerators:
            out.append(np.array(values[start:start + len(N)], dtype=complex))
            start += len(N)
        return out

    def coefficient_tangent(self, curve: SpectralCurve, ell: int, power: int) -> Differential:
        """dv for a unit change of the x^power coefficient of N_ell"""
        if curve.n != 2:
            raise NavigationError("coefficient tangents are implemented for n = 2")
        if not 1 <= ell <= 2 or not 0 <= power < len(curve.numerators[ell - 1]):
            raise NavigationError(f"no coefficient x^{power} in N_{ell}")
        mono = np.zeros(power + 1, dtype=complex)
        mono[power] = 1.0
        if ell == 1:
            term = RationalTerm.of(-0.5 * mono, 0.5 * np.convolve(mono, curve.numerators[0]), curve.pole_poly)
        else:
            term = RationalTerm.of(num1=-mono, den=curve.pole_poly)
        return Differential(f"dN{ell}[{power}]", (term,))

    @wrap_failure(NavigationError, "build the coordinate Jacobian")
    def jacobian(self, curve: SpectralCurve, differentials: DifferentialService = None) -> CoordJacobian:
        ds = differentials or self.differentials_for(curve)
        unknowns = self.coefficient_unknowns(curve)
        tangents = [self.coefficient_tangent(curve, ell, power) for ell, power in unknowns]
        a = ds.a_periods(tangents)  # [tangent, cycle]
        laurent = {(j, s): ds.pole_laurent(tangents, j, s)
                   for j in range(len(curve.poles)) for s in range(curve.n)}
        rows = []
        for d in self.directions(curve):
            if d.kind == 'A':
                rows.append(a[:, d.index])
            else:
                rows.append(laurent[(d.pole, d.sheet)].coefficient(-d.order))
        matrix = np.array(rows)
        if matrix.shape[0] != matrix.shape[1]:
            raise NavigationError(f"coordinate Jacobian is {matrix.shape}, expected square")
        cond = float(np.linalg.cond(matrix))
        logger.info(f"Coordinate Jacobian for {curve.label}: {matrix.shape[0]} unknowns, condition {cond:.2e}")
        return CoordJacobian(matrix, cond, unknowns)

    def _base(self, curve: SpectralCurve, differentials: DifferentialService = None):
        def compute():
            ds = differentials or self.differentials_for(curve)
            return curve, ds, self.coordinates_of(curve, ds), None
        return self._bases.get(id(curve), compute)

    def _base_jacobian(self, curve: SpectralCurve) -> CoordJacobian:
        kept, ds, coords, jac = self._base(curve)
        if jac is None:
            jac = self.jacobian(curve, ds)
            self._bases.put(id(curve), (kept, ds, coords, jac))
        return jac

    # -------------------------------------------------------------- navigation

    def step_to(self, curve: SpectralCurve, target: ModuliPoint, differentials: DifferentialService = None,
                label: str = None) -> SpectralCurve:
        """Chord Newton on the numerator coefficients until the coordinates reach target"""
        _, _, coords, _ = self._base(curve, differentials)
        scale = max(1.0, float(np.max(np.abs(target.values))))
        residual = np.asarray(target.values) - coords.values
        if np.max(np.abs(residual)) <= self.config.NEWTON_TOL * scale:
            return curve
        matrix = self._base_jacobian(curve).matrix
        q = self.flatten(curve.spec)
        current = curve
        best = np.inf
        label = label or f"{curve.label}~"
        for it in range(self.config.NEWTON_MAX_ITER):
            err = float(np.max(np.abs(residual)))
            logger.debug(f"Newton step {it} for {label}: residual {err:.3e}")
            if err <= self.config.NEWTON_TOL * scale:
                logger.info(f"Newton converged for {label} in {it} steps (residual {err:.2e})")
                return current
            if err >= best and err <= self.config.NEWTON_ACCEPT_TOL * scale:
                logger.warning(f"Newton stagnated for {label} at residual {err:.2e}; accepting")
                return current
            if err >= 1e3 * min(best, scale):
                raise NavigationError(f"Newton diverged for {label} (residual {err:.2e})")
            best = min(best, err)
            try:
                dq, _ = solve_dense(matrix, residual)
            except LinearAlgebraError as e:
                raise NavigationError(f"Failed to solve the Newton step: {str(e)}") from e
            q = q + dq
            spec = curve.spec.with_numerators(self.unflatten(curve.spec, q), label)
            try:
                current = self.surfaces.build_surface(spec, reference=curve)
                residual = np.asarray(target.values) - self.coordinates_of(current).values
            except NavigationError:
                raise
            except SpeclabError as e:
                logger.error(f"Failed to build the Newton iterate {label}: {str(e)}")
                raise NavigationError(f"Failed to build the Newton iterate {label}: {str(e)}") from e
        err = float(np.max(np.abs(residual)))
        if err <= self.config.NEWTON_ACCEPT_TOL * scale:
            logger.warning(f"Newton reached the iteration cap for {label} at residual {err:.2e}; accepting")
            return current
        raise NavigationError(f"Newton did not converge for {label} (residual {err:.2e})")

    def perturbed(self, curve: SpectralCurve, direction: CoordinateDirection, step: complex,
                  differentials: DifferentialService = None) -> DifferentialService:
        """Differentials on the curve whose coordinate `direction` moved by step; cached per step"""
        def compute():
            _, ds, coords, _ = self._base(curve, differentials)
            label = f"{curve.label}[{direction.name}{complex(step):+.1e}]"
            moved = self.step_to(curve, coords.shifted(direction, step), label=label)
            return self.differentials_for(moved, reference=ds)
        return self._perturbed.get((id(curve), direction.name, complex(step)), compute)

    def coefficient_perturbed(self, curve: SpectralCurve, ell: int, power: int, step: complex,
                              differentials: DifferentialService = None) -> DifferentialService:
        def compute():
            _, ds, _, _ = self._base(curve, differentials)
            numerators = [np.array(N, dtype=complex) for N in curve.numerators]
            numerators[ell - 1][power] += step
            spec = curve.spec.with_numerators(numerators, f"{curve.label}[N{ell}.{power}{complex(step):+.1e}]")
            return self.differentials_for(self.surfaces.build_surface(spec, reference=curve), ds)
        return self._perturbed.get((id(curve), f"N{ell}[{power}]", complex(step)), compute)

    # ------------------------------------------------------ finite differences

    def _richardson(self, evaluate: Callable, h: float, log: bool) -> FDResult:
        def central(step):
            plus, minus = np.asarray(evaluate(step)), np.asarray(evaluate(-step))
            if log:
                return log_near_one(plus / minus) / (2 * step)
            return (plus - minus) / (2 * step)

        coarse = central(h)
        fine = central(h / 2)
        gap = float(np.max(np.abs(coarse - fine)))
        return FDResult((4 * fine - coarse) / 3, coarse, fine, gap, h)

    @wrap_failure(NavigationError, "evaluate a finite-difference derivative")
    def fd_derivative(self, curve: SpectralCurve, functional: Callable, direction: CoordinateDirection,
                      eps: float = None, log: bool = False, differentials: DifferentialService = None) -> FDResult:
        """Richardson central difference of functional(DifferentialService) along a coordinate.

        With log=True the derivative of ln functional is taken from the
        ratio of the two evaluations.
        """
        _, _, coords, _ = self._base(curve, differentials)
        z = coords.value_of(direction)
        h = (eps or self.config.FD_EPS) * max(1.0, abs(z))
        result = self._richardson(lambda step: functional(self.perturbed(curve, direction, step)), h, log)
        logger.debug(f"FD along {direction.name} on {curve.label}: eps {h:.1e}, gap {result.gap:.2e}")
        return result

    def central_difference(self, curve: SpectralCurve, functional: Callable, direction: CoordinateDirection,
                           step: float, log: bool = False, differentials: DifferentialService = None):
        """Plain (F[z + step] - F[z - step]) / 2 step without extrapolation"""
        self._base(curve, differentials)
        plus = np.asarray(functional(self.perturbed(curve, direction, step)))
        minus = np.asarray(functional(self.perturbed(curve, direction, -step)))
        if log:
            return log_near_one(plus / minus) / (2 * step)
        return (plus - minus) / (2 * step)

    def base_coordinates(self, curve: SpectralCurve, differentials: DifferentialService = None) -> ModuliPoint:
        return self._base(curve, differentials)[2]

    @wrap_failure(NavigationError, "evaluate a coefficient finite difference")
    def coefficient_fd(self, curve: SpectralCurve, functional: Callable, ell: int, power: int,
                       eps: float = None, differentials: DifferentialService = None) -> FDResult:
        """Richardson central difference along one raw numerator coefficient"""
        self._base(curve, differentials)
        scale = max(1.0, abs(curve.numerators[ell - 1][power]))
        h = (eps or self.config.FD_EPS) * scale
        return self._richardson(lambda step: functional(self.coefficient_perturbed(curve, ell, power, step)),
                                h, False)

    def forget(self, curve: SpectralCurve = None, perturbations_only: bool = False):
        """Drop cached builds: everything, or the perturbations (and unless told otherwise the base) of one curve"""
        if curve is None:
            self._bases.discard()
            self._perturbed.discard()
            return
        key = id(curve)
        self._perturbed.discard(lambda k: k[0] == key)
        if not perturbations_only:
            self._bases.discard(lambda k: k == key)
        logger.debug(f"Forgot cached builds of {curve.label}")
