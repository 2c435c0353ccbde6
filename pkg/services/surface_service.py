import logging
from dataclasses import replace

import numpy as np
import numpy.polynomial.polynomial as P

from config import Config
from models.contour import Arc, Contour, Segment
from models.curve import Chart, HomologyBasis, SpectralCurve, SurfacePoint, Zero
from models.instance import InstanceSpec
from services.instance_service import InstanceService
from utils.errors import ContinuationError, HomologyError, NavigationError, SurfaceError
from utils.geometry import (circle, detoured_line, piece_crossings, point_segment_distance,
                            segment_distance, stadium)
from utils.numerics import poly_roots, poly_trim

logger = logging.getLogger(__name__)


class SurfaceService:
    def __init__(self, instance_service: InstanceService = None):
        self.config = Config()
        self.instances = instance_service or InstanceService()

    # ------------------------------------------------------------------ build

    def build_surface(self, spec: InstanceSpec, reference: SpectralCurve = None) -> SpectralCurve:
        """Build the cover; a reference curve fixes every labelling choice for perturbed builds"""
        counts = self.instances.derived_counts(spec)
        report = self.instances.validate_genericity(spec)
        self.instances.require_generic(spec, report)

        pole_poly = spec.pole_polynomial()
        disc = self.instances.discriminant(spec)
        roots = np.array([r.value for r in poly_roots(disc)], dtype=complex)
        if reference is None:
            branch = np.array(sorted(roots, key=lambda z: (z.real, z.imag)), dtype=complex)
        else:
            branch = self._track_points(reference.branch_points, roots, "branch point")

        top = spec.numerators[-1]
        zero_x = np.array([r.value for r in poly_roots(top)], dtype=complex) if len(poly_trim(top)) > 1 \
            else np.zeros(0, dtype=complex)
        if reference is not None:
            zero_x = self._track_points(np.array([z.point.x for z in reference.regular_zeros]), zero_x,
                                        "zero of v")

        singular = np.concatenate([branch, [p.x for p in spec.poles], zero_x])
        basepoint = reference.basepoint if reference is not None else self._choose_basepoint(singular)

        curve = SpectralCurve(spec=spec, counts=counts, pole_poly=pole_poly, discriminant=disc,
                              branch_points=branch, basepoint=basepoint,
                              sheet_values=np.zeros(spec.n, dtype=complex), label=spec.label)
        if spec.n == 2:
            curve.sqrt_lc = complex(np.sqrt(poly_trim(disc)[-1]))
            curve.sigma = self._orientation(curve, reference)
            curve.sheet_values = np.array([self.sheet_phi(curve, basepoint, s) for s in range(2)])
        else:
            curve.sheet_values = self._fiber_at(curve, basepoint)

        curve.zeros = self._zero_divisor(curve, zero_x)
        if reference is not None:
            curve.root_index = reference.root_index
        else:
            curve.root_index = max(range(len(curve.zeros)), key=lambda i: curve.zeros[i].key)
        curve.genericity = self.instances.validate_genericity(spec, curve)
        self.instances.require_generic(spec, curve.genericity)

        if reference is None:
            curve.monodromy = self.monodromy(curve)
        else:
            curve.monodromy = reference.monodromy
        if spec.n == 2 and counts.genus > 0:
            curve.basis = self.homology_basis(curve, None if reference is None else reference.basis)
        logger.info(f"Built surface {spec.label}: n={spec.n}, genus={counts.genus}, "
                    f"{len(branch)} branch points, {len(curve.zeros)} zeros of v")
        return curve

    def _choose_basepoint(self, singular: np.ndarray) -> complex:
        center = np.mean(singular)
        radius = 1.5 * np.max(np.abs(singular - center)) + 1.0
        angles = 2 * np.pi * np.arange(self.config.BASEPOINT_ANGLES) / self.config.BASEPOINT_ANGLES
        candidates = center + radius * np.exp(1j * angles)
        score = np.min(np.abs(candidates[:, None] - singular[None, :]), axis=1)
        return complex(candidates[int(np.argmax(score))])

    def _track_points(self, old: np.ndarray, new: np.ndarray, what: str) -> np.ndarray:
        """Match new points to the old labelling by nearest neighbour"""
        if len(old) != len(new):
            raise NavigationError(f"Number of {what}s changed from {len(old)} to {len(new)}")
        if len(old) < 2:
            return np.array(new, dtype=complex)
        separation = min(abs(a - b) for i, a in enumerate(old) for b in old[i + 1:])
        guard = self.config.TRACKING_GUARD * separation
        out = np.empty(len(old), dtype=complex)
        used = set()
        for i, z in enumerate(old):
            j = int(np.argmin(np.abs(new - z)))
            if j in used or abs(new[j] - z) > guard:
                raise NavigationError(f"{what} collision while tracking near {z:.6g}")
            used.add(j)
            out[i] = new[j]
        return out

    def _orientation(self, curve: SpectralCurve, reference: SpectralCurve = None) -> int:
        curve.sigma = 1
        w = self.sheet_w(curve, curve.basepoint, 0)
        if reference is not None:
            ref_w = self.sheet_w(reference, reference.basepoint, 0)
            return 1 if abs(w - ref_w) <= abs(w + ref_w) else -1
        plus, minus = self.sheet_phi(curve, curve.basepoint, 0), self.sheet_phi(curve, curve.basepoint, 1)
        return 1 if (plus.real, plus.imag) <= (minus.real, minus.imag) else -1

    def _fiber_at(self, curve: SpectralCurve, x: complex) -> np.ndarray:
        psi = np.roots([1.0] + [P.polyval(x, N) for N in curve.numerators])
        phi = psi / P.polyval(x, curve.pole_poly)
        return np.array(sorted(phi, key=lambda z: (z.real, z.imag)), dtype=complex)

    def _zero_divisor(self, curve: SpectralCurve, zero_x: np.ndarray) -> tuple:
        zeros = [Zero(SurfacePoint(complex(e), 0, branch=i), 'branch') for i, e in enumerate(curve.branch_points)]
        for z in zero_x:
            if curve.n == 2:
                residual = [abs(self.sheet_phi(curve, z, s)) for s in range(2)]
                sheet = int(np.argmin(residual))
            else:
                sheet = -1
            zeros.append(Zero(SurfacePoint(complex(z), sheet), 'regular'))
        return tuple(zeros)

    # ------------------------------------------------------------- evaluation

    def sheet_w(self, curve: SpectralCurve, x, sheet=0):
        """Cut-plane square root of the discriminant; cuts join consecutive branch points"""
        x = np.asarray(x, dtype=complex)
        e = curve.branch_points
        w = np.full(x.shape, curve.sqrt_lc, dtype=complex)
        for k in range(0, len(e), 2):
            a, b = e[k], e[k + 1]
            d = x - 0.5 * (a + b)
            w = w * d * np.sqrt((x - a) * (x - b) / d ** 2)
        sign = curve.sigma * (1 - 2 * (np.asarray(sheet) % 2))
        return sign * w

    def sheet_phi(self, curve: SpectralCurve, x, sheet=0):
        x = np.asarray(x, dtype=complex)
        N1 = curve.numerators[0]
        return (-P.polyval(x, N1) + self.sheet_w(curve, x, sheet)) / (2 * P.polyval(x, curve.pole_poly))

    def branch_scale(self, curve: SpectralCurve, index: int) -> complex:
        """K with K^2 = D'(e) so that w = K t + O(t^3) in the branch chart"""
        e = curve.branch_points
        others = np.delete(e, index)
        lc = curve.sqrt_lc ** 2
        return complex(np.sqrt(lc * np.prod(e[index] - others)))

    def _nearest_distance(self, curve: SpectralCurve, z: complex) -> float:
        pts = curve.singular_points()
        dist = np.abs(pts - z)
        dist = dist[dist > 1e-12 * max(1.0, abs(z))]
        return float(np.min(dist)) if dist.size else 1.0

    def chart_at(self, curve: SpectralCurve, point: SurfacePoint) -> Chart:
        d = self._nearest_distance(curve, point.x)
        factor = self.config.JET_RADIUS_FACTOR
        if point.is_branch:
            return Chart('branch', point.x, 0, point.branch, radius=float(np.sqrt(factor * d)),
                         reach=float(np.sqrt(d)))
        return Chart('regular', point.x, point.sheet, None, radius=factor * d, reach=d)

    def regular_frame(self, curve: SpectralCurve, center, sheet, t):
        """(x, dx/dt, w) in the chart x = center + t continuing the cut-plane value at center"""
        center = np.asarray(center, dtype=complex)
        t = np.asarray(t, dtype=complex)
        w = self.sheet_w(curve, center, sheet)
        w = np.broadcast_to(w, np.broadcast(center, t).shape).astype(complex)
        for e in curve.branch_points:
            w = w * np.sqrt(1.0 + t / (center - e))
        return center + t, np.ones_like(w), w

    def branch_frame(self, curve: SpectralCurve, index: int, t):
        """(x, dx/dt, w) in the chart x = e + t^2 at a branch point"""
        t = np.asarray(t, dtype=complex)
        e = curve.branch_points[index]
        w = t * self.branch_scale(curve, index)
        for j, other in enumerate(curve.branch_points):
            if j != index:
                w = w * np.sqrt(1.0 + t ** 2 / (e - other))
        return e + t ** 2, 2.0 * t, w

    def chart_frame(self, curve: SpectralCurve, chart: Chart, t):
        if chart.kind == 'branch':
            return self.branch_frame(curve, chart.index, t)
        return self.regular_frame(curve, chart.center, chart.sheet, t)

    # ------------------------------------------------------------------ paths

    def _obstacles(self, curve: SpectralCurve, skip=()):
        pts = np.concatenate([curve.branch_points, [p.x for p in curve.poles]])
        out = []
        for z in pts:
            if any(abs(z - s) <= 1e-12 * max(1.0, abs(z)) for s in skip):
                continue
            out.append((complex(z), self.config.SAFETY_FACTOR * self._nearest_distance(curve, z)))
        return out

    def _cuts(self, curve: SpectralCurve):
        e = curve.branch_points
        return [(e[k], e[k + 1]) for k in range(0, len(e), 2)]

    def _split_at_cuts(self, curve: SpectralCurve, pieces, start_sheet: int):
        cuts = [Segment(a, b) for a, b in self._cuts(curve)]
        sheet = start_sheet
        out = []
        for piece in pieces:
            fractions = []
            for cut in cuts:
                for u, _, _, _ in piece_crossings(piece, cut):
                    if 1e-9 < u < 1.0 - 1e-9:
                        fractions.append(u)
            for k, sub in enumerate(piece.split_at(sorted(fractions))):
                if k > 0:
                    sheet = 1 - sheet
                out.append(replace(sub, sheet=sheet))
        return out

    def _crossing_parity(self, curve: SpectralCurve, pieces) -> int:
        split = self._split_at_cuts(curve, pieces, 0)
        return split[-1].sheet if split else 0

    def canonical_path(self, curve: SpectralCurve, start: SurfacePoint, end: SurfacePoint,
                       label: str = "") -> Contour:
        """Deterministic path on the double cover: straight line, detours, sheet flips at cuts"""
        if abs(start.x - end.x) <= 1e-15 and (start.is_branch or start.sheet == end.sheet):
            return Contour((), label=label)
        skip = [z for z in (start.x, end.x)]
        pieces, blocked = detoured_line(start.x, end.x, self._obstacles(curve, skip),
                                        start.is_branch, end.is_branch)
        if blocked:
            raise ContinuationError(f"Path endpoint within the safety radius of singular point {blocked[0]:.6g}")
        if start.is_branch:
            target = 0 if end.is_branch else end.sheet
            start_sheet = (target + self._crossing_parity(curve, pieces)) % 2
            return Contour(tuple(self._split_at_cuts(curve, pieces, start_sheet)), label=label)
        split = self._split_at_cuts(curve, pieces, start.sheet)
        if end.is_branch or (split and split[-1].sheet == end.sheet):
            return Contour(tuple(split), label=label)
        candidates = [i for i, e in enumerate(curve.branch_points) if abs(e - start.x) > 1e-12]
        k = min(candidates, key=lambda i: abs(curve.branch_points[i] - end.x))
        via = SurfacePoint(complex(curve.branch_points[k]), 0, branch=k)
        first = self.canonical_path(curve, start, via)
        second = self.canonical_path(curve, via, end)
        return Contour.concat(first, second, label=label)

    def reference_path(self, curve: SpectralCurve, point: SurfacePoint) -> Contour:
        return self.canonical_path(curve, curve.root_zero.point, point, label="reference")

    def intersection_number(self, first: Contour, second: Contour) -> int:
        total = 0
        for p in first.pieces:
            for q in second.pieces:
                if p.sheet == q.sheet:
                    total += sum(sign for _, _, _, sign in piece_crossings(p, q))
        return total

    # --------------------------------------------------------------- homology

    def homology_basis(self, curve: SpectralCurve, reference: HomologyBasis = None) -> HomologyBasis:
        """a-cycles around cuts, b-cycles assembled from cycles around the gaps between cuts"""
        if curve.n != 2:
            raise HomologyError("homology basis not implemented for n>2")
        genus = curve.genus
        e = curve.branch_points
        cuts = self._cuts(curve)
        singular = curve.singular_points()

        def clearance(a, b, skip_cuts):
            dists = [point_segment_distance(z, a, b) for z in singular
                     if abs(z - a) > 1e-12 and abs(z - b) > 1e-12]
            dists += [segment_distance(a, b, c, d) for k, (c, d) in enumerate(cuts) if k not in skip_cuts]
            return min(dists)

        if reference is None:
            cut_radii = np.array([self.config.CUT_CYCLE_FACTOR * clearance(a, b, {k})
                                  for k, (a, b) in enumerate(cuts[:genus])])
            gap_radii = np.array([self.config.GAP_CYCLE_FACTOR * clearance(e[2 * m + 1], e[2 * m + 2], {m, m + 1})
                                  for m in range(genus)])
        else:
            cut_radii, gap_radii = reference.cut_radii, reference.gap_radii

        a_cycles = tuple(stadium(cuts[k][0], cuts[k][1], cut_radii[k], 0, label=f"a{k}") for k in range(genus))
        gap_cycles = []
        for m in range(genus):
            loop = stadium(e[2 * m + 1], e[2 * m + 2], gap_radii[m], 0, label=f"gap{m}")
            pieces = self._split_at_cuts(curve, loop.pieces, 0)
            if pieces[-1].sheet != 0:
                raise HomologyError(f"Gap cycle {m} does not close on the cover")
            gap_cycles.append(Contour(tuple(pieces), closed=True, label=f"gap{m}"))
        gap_cycles = tuple(gap_cycles)

        if reference is None:
            a_dot_gap = np.array([[self.intersection_number(a, g) for g in gap_cycles] for a in a_cycles])
            gap_dot_gap = np.array([[self.intersection_number(g, h) for h in gap_cycles] for g in gap_cycles])
            if round(abs(np.linalg.det(a_dot_gap))) != 1:
                raise HomologyError(f"Intersection matrix of a-cycles with gap cycles is not unimodular: {a_dot_gap}")
            c = np.rint(np.linalg.inv(a_dot_gap.T)).astype(int)
            J = c @ gap_dot_gap @ c.T
            M = -np.triu(J, 1)
        else:
            a_dot_gap, gap_dot_gap = reference.a_dot_gap, reference.gap_dot_gap
            c, M = reference.b_from_gaps, reference.b_from_a

        basis = HomologyBasis(a_cycles, gap_cycles, c, M, a_dot_gap, gap_dot_gap, cut_radii, gap_radii)
        basis.pole_circles = self._pole_circles(curve)
        basis.zero_paths = tuple(self.canonical_path(curve, curve.root_zero.point, z.point, label=f"l{i}")
                                 if i != curve.root_index else Contour((), label=f"l{i}")
                                 for i, z in enumerate(curve.zeros))
        logger.info(f"Homology basis for {curve.label}: a.gap={a_dot_gap.tolist()}, b from gaps={c.tolist()}")
        return basis

    def _pole_circles(self, curve: SpectralCurve) -> dict:
        cuts = self._cuts(curve)
        out = {}
        for j, pole in enumerate(curve.poles):
            d = self._nearest_distance(curve, pole.x)
            d = min([d] + [point_segment_distance(pole.x, a, b) for a, b in cuts])
            for s in range(curve.n):
                out[(j, s)] = circle(pole.x, self.config.SAFETY_FACTOR * d, s, label=f"c{j}.{s}")
        return out

    def b_cycle_combination(self, basis: HomologyBasis, gap_values: np.ndarray, a_values: np.ndarray):
        """b-cycle integrals from integrals over gap cycles and a-cycles (last axis = cycle index)"""
        return gap_values @ basis.b_from_gaps.T + a_values @ basis.b_from_a.T

    def path_cycle_intersections(self, basis: HomologyBasis, path: Contour):
        """(path . a_beta, path . b_beta) for an open path"""
        with_a = np.array([self.intersection_number(path, a) for a in basis.a_cycles])
        with_gaps = np.array([self.intersection_number(path, g) for g in basis.gap_cycles])
        with_b = basis.b_from_gaps @ with_gaps + basis.b_from_a @ with_a
        return with_a, with_b

    # ----------------------------------------------------- continuation, monodromy

    def _fiber_poly(self, curve: SpectralCurve, x: complex):
        return np.array([1.0] + [P.polyval(x, N) for N in curve.numerators], dtype=complex)

    def labels_at(self, curve: SpectralCurve, x: complex) -> np.ndarray:
        """phi values in label order over x"""
        if curve.n == 2:
            return np.array([self.sheet_phi(curve, x, s) for s in range(2)])
        if abs(x - curve.basepoint) > 1e-12 * max(1.0, abs(x)):
            raise ContinuationError("sheet labels are only defined at the basepoint for n > 2")
        return curve.sheet_values

    def track_roots(self, curve: SpectralCurve, contour: Contour, start_phi: np.ndarray):
        """Predictor-corrector continuation of all fiber roots along the contour"""
        n = curve.n
        psi = np.asarray(start_phi, dtype=complex) * P.polyval(contour.start, curve.pole_poly)
        derivs = [P.polyder(N) if len(N) > 1 else np.zeros(1, dtype=complex) for N in curve.numerators]
        log = [(complex(contour.start), psi / P.polyval(contour.start, curve.pole_poly))]
        min_step = self.config.CONTINUATION_MIN_STEP
        for piece in contour.pieces:
            s, h = 0.0, 1.0 / 16
            while s < 1.0 - 1e-15:
                h = min(h, 1.0 - s)
                x0 = complex(piece.points(s))
                x1 = complex(piece.points(s + h))
                # Euler predictor from dpsi/dx = -F_x / F_psi
                coeffs = self._fiber_poly(curve, x0)
                F_psi = sum((n - ell) * coeffs[ell] * psi ** (n - ell - 1) for ell in range(n))
                F_x = sum(P.polyval(x0, derivs[ell - 1]) * psi ** (n - ell) for ell in range(1, n + 1))
                predicted = psi - F_x / F_psi * (x1 - x0)
                corrected = predicted.copy()
                coeffs1 = self._fiber_poly(curve, x1)
                for _ in range(6):
                    value = sum(coeffs1[ell] * corrected ** (n - ell) for ell in range(n + 1))
                    slope = sum((n - ell) * coeffs1[ell] * corrected ** (n - ell - 1) for ell in range(n))
                    corrected = corrected - value / slope
                diff = np.abs(psi[:, None] - psi[None, :])
                np.fill_diagonal(diff, np.inf)
                separation = float(np.min(diff))
                moved = float(np.max(np.abs(corrected - psi)))
                drift = float(np.max(np.abs(corrected - predicted)))
                if moved < 0.25 * separation and drift < 0.1 * separation:
                    psi = corrected
                    s += h
                    log.append((x1, psi / P.polyval(x1, curve.pole_poly)))
                    h = min(2 * h, 0.25)
                else:
                    h *= 0.5
                    if h < min_step:
                        raise ContinuationError(f"Root collision while continuing near x={x1:.6g}")
        return psi / P.polyval(contour.end, curve.pole_poly), log

    def _match_labels(self, values: np.ndarray, labels: np.ndarray) -> list:
        out = []
        for v in values:
            out.append(int(np.argmin(np.abs(labels - v))))
        if len(set(out)) != len(out):
            raise ContinuationError("Ambiguous sheet matching at the end of the path")
        return out

    def continue_sheet(self, curve: SpectralCurve, path: Contour, start_sheet: int):
        """End sheet label and the log of (x, phi values) along the path"""
        start_labels = self.labels_at(curve, path.start)
        end_phi, log = self.track_roots(curve, path, start_labels)
        matched = self._match_labels(end_phi, self.labels_at(curve, path.end))
        return matched[start_sheet], log

    def branch_loop(self, curve: SpectralCurve, index: int) -> Contour:
        x0 = curve.basepoint
        e = complex(curve.branch_points[index])
        radius = self.config.SAFETY_FACTOR * self._nearest_distance(curve, e)
        direction = (x0 - e) / abs(x0 - e)
        touch = e + radius * direction
        pieces, blocked = detoured_line(x0, touch, self._obstacles(curve, [e]))
        if blocked:
            raise ContinuationError(f"Basepoint spoke to branch point {index} is blocked")
        theta = float(np.angle(direction))
        out = Contour(tuple(pieces))
        loop = Contour((Arc(e, radius, theta, theta + 2 * np.pi),))
        return Contour.concat(out, loop, out.reversed(), label=f"loop{index}")

    def monodromy(self, curve: SpectralCurve) -> tuple:
        """Permutations of the loops around each branch point, in angular order around the basepoint"""
        x0 = curve.basepoint
        reference_dir = np.mean(curve.singular_points()) - x0
        order = sorted(range(len(curve.branch_points)),
                       key=lambda i: np.angle((curve.branch_points[i] - x0) / reference_dir))
        labels = curve.sheet_values if curve.n > 2 else self.labels_at(curve, x0)
        perms = []
        for i in order:
            end_phi, _ = self.track_roots(curve, self.branch_loop(curve, i), labels)
            perms.append((i, tuple(self._match_labels(end_phi, labels))))
        self.check_monodromy(perms, curve.n, curve.label)
        return tuple(perms)

    @staticmethod
    def check_monodromy(perms, n: int, label: str = ""):
        """Every loop must swap exactly two sheets and the loops must compose to the identity"""
        for i, perm in perms:
            moved = [s for s in range(n) if perm[s] != s]
            if len(moved) != 2:
                raise SurfaceError(f"Monodromy around branch point {i} of {label} is not a transposition: {perm}")
        total = SurfaceService.compose([perm for _, perm in perms]) if perms else list(range(n))
        if total != list(range(n)):
            raise SurfaceError(f"Monodromy product of {label} is {total}, expected identity")
        logger.debug(f"Monodromy of {label}: {len(perms)} transpositions, product identity")

    @staticmethod
    def compose(perms) -> list:
        """Apply the permutations in order, first one first"""
        n = len(perms[0])
        total = list(range(n))
        for perm in perms:
            total = [perm[s] for s in total]
        return total
