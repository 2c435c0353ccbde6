import json
import logging
import math
import os

import numpy as np
import numpy.polynomial.polynomial as P

from config import Config
from models.instance import DerivedCounts, GenericityReport, InstanceSpec, Pole
from utils.errors import GenericityError, InstanceError
from utils.numerics import poly_roots, poly_trim, series_inv, series_mul, series_sqrt1p, taylor_shift

logger = logging.getLogger(__name__)


def counts_for(n: int, orders) -> DerivedCounts:
    """Branch-point, genus, zero and dimension counts of an n-sheeted cover of the sphere"""
    K = int(sum(orders))
    p = n * (n - 1) * (K - 2)
    genus = 1 - n * n + n * (n - 1) * K // 2
    if n == 1:
        p, genus = 0, 0
    r = 2 * genus - 2 + n * K
    dim = genus + n * K - 1
    return DerivedCounts(n, K, p, genus, r, dim, tuple(ell * (K - 2) + 1 for ell in range(1, n + 1)))


class InstanceService:
    def __init__(self, instance_dir: str = None):
        self.config = Config()
        self.instance_dir = instance_dir or self.config.INSTANCE_DIR

    def _complex(self, value, field: str) -> complex:
        if isinstance(value, (list, tuple)) and len(value) == 2 and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            if not all(math.isfinite(v) for v in value):
                raise InstanceError(f"non-finite component in {value!r}", field)
            return complex(float(value[0]), float(value[1]))
        raise InstanceError(f"expected [re, im] pair, got {value!r}", field)

    def parse_instance(self, document: str, source: str = "") -> InstanceSpec:
        try:
            data = json.loads(document)
        except json.JSONDecodeError as e:
            raise InstanceError(f"malformed document: {str(e)}", "$")
        if not isinstance(data, dict):
            raise InstanceError("document must be a JSON object", "$")

        label = data.get("label")
        if not isinstance(label, str) or not label:
            raise InstanceError("missing label", "label")

        n = data.get("n")
        if not isinstance(n, int) or isinstance(n, bool):
            raise InstanceError("n must be an integer", "n")
        if n < 2:
            raise InstanceError(f"n must be at least 2, got {n}", "n")

        poles_data = data.get("poles")
        if not isinstance(poles_data, list) or not poles_data:
            raise InstanceError("at least one pole is required", "poles")
        poles = []
        for i, pole_data in enumerate(poles_data):
            if not isinstance(pole_data, dict):
                raise InstanceError("pole entry must be an object", f"poles[{i}]")
            x = self._complex(pole_data.get("x"), f"poles[{i}].x")
            k = pole_data.get("k")
            if not isinstance(k, int) or isinstance(k, bool) or k < 1:
                raise InstanceError(f"pole order must be a positive integer, got {k!r}", f"poles[{i}].k")
            for j, other in enumerate(poles):
                if abs(other.x - x) <= 1e-14 * max(1.0, abs(x)):
                    raise InstanceError(f"duplicate pole (same location as poles[{j}])", f"poles[{i}].x")
            poles.append(Pole(x, k))
        K = sum(p.k for p in poles)

        q_data = data.get("Q")
        if not isinstance(q_data, list):
            raise InstanceError("Q must be a list", "Q")
        by_ell = {}
        for i, entry in enumerate(q_data):
            ell = entry.get("ell") if isinstance(entry, dict) else None
            if not isinstance(ell, int) or isinstance(ell, bool) or not 1 <= ell <= n:
                raise InstanceError(f"ell must be an integer in 1..{n}", f"Q[{i}].ell")
            if ell in by_ell:
                raise InstanceError(f"duplicate differential ell={ell}", f"Q[{i}].ell")
            numer = entry.get("numer")
            if not isinstance(numer, list) or not numer:
                raise InstanceError("numer must be a non-empty list", f"Q[{i}].numer")
            coeffs = np.array([self._complex(c, f"Q[{i}].numer[{m}]") for m, c in enumerate(numer)])
            bound = ell * K - 2 * ell
            degree = len(poly_trim(coeffs)) - 1 if np.any(coeffs != 0) else -1
            if degree > bound:
                raise InstanceError(f"degree bound violated: deg N_{ell} = {degree} > {bound}", f"Q[{i}].numer")
            padded = np.zeros(max(bound + 1, 1), dtype=complex)
            padded[:min(len(coeffs), len(padded))] = coeffs[:len(padded)]
            by_ell[ell] = padded
        for ell in range(1, n + 1):
            if ell not in by_ell:
                raise InstanceError(f"missing differential ell={ell}", "Q")

        residue_free = data.get("residue_free", False)
        if not isinstance(residue_free, bool):
            raise InstanceError("residue_free must be a boolean", "residue_free")

        spec = InstanceSpec(label, n, tuple(poles), tuple(by_ell[ell] for ell in range(1, n + 1)),
                            residue_free, source)
        logger.debug(f"Parsed instance {label}: n={n}, K={K}")
        return spec

    def load(self, name: str) -> InstanceSpec:
        """Load an instance by file path or built-in label"""
        path = name if os.path.isfile(name) else os.path.join(self.instance_dir, f"{name}.json")
        if not os.path.isfile(path):
            raise InstanceError(f"unknown instance {name!r}; built-ins: {', '.join(self.builtin_labels())}",
                                "instance")
        with open(path, encoding="utf-8") as fh:
            spec = self.parse_instance(fh.read(), source=path)
        if spec.residue_free:
            self.check_residue_free(spec)
        logger.info(f"Loaded instance {spec.label} from {path}")
        return spec

    def builtin_labels(self):
        if not os.path.isdir(self.instance_dir):
            return []
        return sorted(f[:-5] for f in os.listdir(self.instance_dir) if f.endswith(".json"))

    def derived_counts(self, spec: InstanceSpec) -> DerivedCounts:
        counts = counts_for(spec.n, [p.k for p in spec.poles])
        # g = 0: n(n+1)/2 * K - n^2 must agree with genus + nK - 1
        expected = spec.n * (spec.n + 1) * counts.total_order // 2 - spec.n ** 2
        if counts.dim != expected:
            raise InstanceError(f"dimension count {counts.dim} disagrees with coefficient count {expected}", "Q")
        return counts

    def residues(self, spec: InstanceSpec):
        """Residues of v at every point over every pole, pole-major and sheet-minor (n = 2)"""
        if spec.n != 2:
            raise InstanceError("residue check is implemented for n = 2 only", "n")
        N1, N2 = spec.numerators
        out = []
        for j, pole in enumerate(spec.poles):
            # local series of P * phi in t = x - y_j
            others = np.ones(1, dtype=complex)
            for i, other in enumerate(spec.poles):
                if i != j:
                    others = P.polymul(others, P.polypow([-other.x, 1.0], other.k))
            out.extend(self._local_residues(N1, N2, pole, others))
        return out

    def _local_residues(self, N1, N2, pole, others):
        k = pole.k
        order = 2 * k + 2
        disc = taylor_shift(P.polysub(P.polymul(N1, N1), 4 * N2), pole.x)
        disc = np.concatenate([disc, np.zeros(order + 1)])[:order + 1]
        if abs(disc[0]) == 0:
            raise GenericityError("branch point at a pole", [pole.x])
        root0 = np.sqrt(disc[0])
        # sqrt(disc) = root0 * sqrt(1 + u), u = disc / disc[0] - 1
        u = disc / disc[0]
        u[0] = 0.0
        sqrt_series = np.zeros(order + 1, dtype=complex)
        power = np.zeros(order + 1, dtype=complex)
        power[0] = 1.0
        coeffs = series_sqrt1p(1.0, 1, order)
        for m in range(order + 1):
            sqrt_series = sqrt_series + coeffs[m] * power
            power = series_mul(power, u, order)
        sqrt_series *= root0
        n1 = np.concatenate([taylor_shift(N1, pole.x), np.zeros(order + 1)])[:order + 1]
        inv_other = np.concatenate([taylor_shift(others, pole.x), np.zeros(order + 1)])[:order + 1]
        inv_other = series_inv(inv_other, order)
        residues = []
        for sign in (1.0, -1.0):
            num = series_mul(-n1 + sign * sqrt_series, inv_other, order) / 2.0
            # phi = num / t^k, residue is the t^(k-1) coefficient of num
            residues.append(num[k - 1])
        return residues

    def check_residue_free(self, spec: InstanceSpec, tol: float = 1e-9):
        residues = self.residues(spec)
        scale = max(1.0, max(np.max(np.abs(c)) for c in spec.numerators))
        worst = max(abs(r) for r in residues)
        if worst > tol * scale:
            raise InstanceError(f"instance flagged residue_free has residue {worst:.2e}", "residue_free")
        return residues

    def validate_genericity(self, spec: InstanceSpec, curve=None) -> GenericityReport:
        """Genericity report; with a built curve its branch points and zeros are reused"""
        report = GenericityReport()
        tol = self.config.GENERICITY_TOL
        counts = self.derived_counts(spec)
        branch_points = regular_zeros = None
        if curve is not None:
            discriminant = curve.discriminant
            branch_points = curve.branch_points
            regular_zeros = [z.point.x for z in curve.regular_zeros]
        else:
            discriminant = self.discriminant(spec)
        roots = poly_roots(discriminant) if len(poly_trim(discriminant)) > 1 else []
        degree = sum(r.multiplicity for r in roots)
        if degree < counts.branch_points:
            report.fail("branch point at infinity", [])
        for r in roots:
            if r.multiplicity > 1:
                report.fail("non-simple branch point", [r.value])
        simple = [r.value for r in roots if r.is_simple]
        if branch_points is not None:
            simple = list(branch_points)
        for pole in spec.poles:
            for e in simple:
                if abs(e - pole.x) <= tol * max(1.0, abs(pole.x)):
                    report.fail("pole collides with branch point", [pole.x])
            fiber = self.fiber_over_pole(spec, pole)
            if len(fiber) != spec.n or min(
                    (abs(a - b) for i, a in enumerate(fiber) for b in fiber[i + 1:]), default=1.0) <= tol:
                report.fail("fiber over pole ramified", [pole.x])

        top = poly_trim(spec.numerators[-1])
        expected = spec.n * counts.total_order - 2 * spec.n
        if len(top) - 1 < expected or not np.any(top != 0):
            report.fail("zero of v at infinity", [])
        elif regular_zeros is None:
            for r in poly_roots(top):
                if r.multiplicity > 1:
                    report.fail("zero of v non-simple", [r.value])
        else:
            zs = list(regular_zeros)
            for i, a in enumerate(zs):
                for b in zs[i + 1:]:
                    if abs(a - b) <= tol * max(1.0, abs(a)):
                        report.fail("zero of v non-simple", [a])
            for a in zs:
                for e in simple:
                    if abs(a - e) <= tol * max(1.0, abs(a)):
                        report.fail("zero of v non-simple", [a])
        for message, locations in report.failures:
            logger.warning(f"Genericity failure on {spec.label}: {message} at {locations}")
        return report

    def require_generic(self, spec: InstanceSpec, report: GenericityReport):
        if not report.passed:
            message, locations = report.failures[0]
            raise GenericityError(f"{spec.label}: {message}", [z for _, locs in report.failures for z in locs])

    def discriminant(self, spec: InstanceSpec) -> np.ndarray:
        """Polynomial whose zeros are the branch points of the cover"""
        if spec.n == 2:
            N1, N2 = spec.numerators
            return P.polysub(P.polymul(N1, N1), 4 * N2)
        return self._resultant_discriminant(spec)

    def _resultant_discriminant(self, spec: InstanceSpec) -> np.ndarray:
        """Discriminant in psi of psi^n + N_1 psi^(n-1) + ... + N_n by interpolation at roots of unity"""
        counts = self.derived_counts(spec)
        degree = counts.branch_points + 2 * spec.n * (spec.n - 1)
        radius = 1.0 + max(abs(p.x) for p in spec.poles)
        nodes = radius * np.exp(2j * np.pi * np.arange(degree + 1) / (degree + 1))
        values = np.array([self._fiber_discriminant(spec, x) for x in nodes])
        coeffs = np.fft.fft(values) / (degree + 1)
        coeffs = coeffs / radius ** np.arange(degree + 1)
        return poly_trim(coeffs, 1e-11)

    def _fiber_discriminant(self, spec: InstanceSpec, x: complex) -> complex:
        psi_poly = [1.0] + [P.polyval(x, N) for N in spec.numerators]  # highest power first
        roots = np.roots(psi_poly)
        value = 1.0 + 0j
        for i in range(len(roots)):
            for j in range(i + 1, len(roots)):
                value *= (roots[i] - roots[j]) ** 2
        return value

    def fiber_over_pole(self, spec: InstanceSpec, pole: Pole):
        """Leading coefficients of P*phi over a pole: roots of psi^n + N_1(y) psi^(n-1) + ..."""
        psi_poly = [1.0] + [P.polyval(pole.x, N) for N in spec.numerators]
        return list(np.roots(psi_poly))
