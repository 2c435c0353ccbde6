# models/curve.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from models.instance import DerivedCounts, GenericityReport, InstanceSpec


@dataclass(frozen=True)
class SurfacePoint:
    """A point of the cover: base coordinate plus sheet label.

    branch is set for ramification points, where the sheet is irrelevant.
    """
    x: complex
    sheet: int = 0
    branch: Optional[int] = None

    @property
    def is_branch(self):
        return self.branch is not None


@dataclass(frozen=True)
class Zero:
    point: SurfacePoint
    kind: str  # 'branch' or 'regular'

    @property
    def key(self):
        return (self.point.x.real, self.point.x.imag, self.point.sheet)


@dataclass(frozen=True)
class Chart:
    """Local parameter t at a surface point.

    kind 'regular': x = center + t on the given sheet.
    kind 'branch':  x = center + t**2 around ramification point `index`.
    """
    kind: str
    center: complex
    sheet: int = 0
    index: Optional[int] = None
    radius: float = 0.0  # jet circle radius in t
    reach: float = 0.0  # distance in t to the nearest other singular point


@dataclass(eq=False)
class HomologyBasis:
    a_cycles: tuple
    gap_cycles: tuple
    b_from_gaps: np.ndarray  # b_i = sum_m b_from_gaps[i, m] gap_m + sum_k b_from_a[i, k] a_k
    b_from_a: np.ndarray
    a_dot_gap: np.ndarray
    gap_dot_gap: np.ndarray
    cut_radii: np.ndarray
    gap_radii: np.ndarray
    pole_circles: dict = field(default_factory=dict)  # (j, s) -> Contour
    zero_paths: tuple = ()  # x_r -> zero i

    @property
    def genus(self):
        return len(self.a_cycles)


@dataclass(eq=False)
class SpectralCurve:
    spec: InstanceSpec
    counts: DerivedCounts
    pole_poly: np.ndarray
    discriminant: np.ndarray
    branch_points: np.ndarray
    basepoint: complex
    sheet_values: np.ndarray  # phi at the basepoint in label order
    sigma: int = 1
    sqrt_lc: complex = 1.0
    zeros: tuple = ()
    root_index: int = 0
    genericity: GenericityReport = field(default_factory=GenericityReport)
    basis: Optional[HomologyBasis] = None
    monodromy: tuple = ()
    label: str = ""

    @property
    def n(self):
        return self.spec.n

    @property
    def genus(self):
        return self.counts.genus

    @property
    def numerators(self):
        return self.spec.numerators

    @property
    def poles(self):
        return self.spec.poles

    @property
    def pole_points(self):
        """Ordered y_j^(s): pole-major, sheet-minor"""
        return tuple(SurfacePoint(pole.x, s) for pole in self.spec.poles for s in range(self.n))

    @property
    def branch_zeros(self):
        return tuple(z for z in self.zeros if z.kind == 'branch')

    @property
    def regular_zeros(self):
        return tuple(z for z in self.zeros if z.kind == 'regular')

    @property
    def root_zero(self):
        return self.zeros[self.root_index]

    def singular_points(self, include_zeros: bool = True) -> np.ndarray:
        pts = list(self.branch_points) + [p.x for p in self.spec.poles]
        if include_zeros:
            pts += [z.point.x for z in self.regular_zeros]
        return np.asarray(pts, dtype=complex)
