# models/contour.py
from dataclasses import dataclass, replace
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex
    sheet: int = 0

    def points(self, s):
        return self.start + (self.end - self.start) * np.asarray(s)

    def derivatives(self, s):
        return np.full(np.shape(s), self.end - self.start, dtype=complex)

    def split_at(self, fractions):
        cuts = [0.0, *sorted(fractions), 1.0]
        pts = [self.start + (self.end - self.start) * u for u in cuts]
        return [Segment(pts[i], pts[i + 1], self.sheet) for i in range(len(pts) - 1)]

    def reversed(self):
        return Segment(self.end, self.start, self.sheet)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float
    sheet: int = 0

    @property
    def start(self):
        return self.center + self.radius * np.exp(1j * self.theta0)

    @property
    def end(self):
        return self.center + self.radius * np.exp(1j * self.theta1)

    def angles(self, s):
        return self.theta0 + (self.theta1 - self.theta0) * np.asarray(s)

    def points(self, s):
        return self.center + self.radius * np.exp(1j * self.angles(s))

    def derivatives(self, s):
        return 1j * self.radius * (self.theta1 - self.theta0) * np.exp(1j * self.angles(s))

    def split_at(self, fractions):
        cuts = [0.0, *sorted(fractions), 1.0]
        th = [self.theta0 + (self.theta1 - self.theta0) * u for u in cuts]
        return [Arc(self.center, self.radius, th[i], th[i + 1], self.sheet) for i in range(len(th) - 1)]

    def reversed(self):
        return Arc(self.center, self.radius, self.theta1, self.theta0, self.sheet)


@dataclass(frozen=True)
class BranchSegment:
    """Straight leg touching a branch point, parametrised quadratically at that end.

    x(s) = branch + (other - branch) * tau(s)**2 with tau = s leaving the branch
    point and tau = 1 - s arriving at it, so v stays smooth in s.
    """
    branch: complex
    other: complex
    outward: bool = True
    sheet: int = 0

    @property
    def start(self):
        return self.branch if self.outward else self.other

    @property
    def end(self):
        return self.other if self.outward else self.branch

    def points(self, s):
        tau = np.asarray(s) if self.outward else 1.0 - np.asarray(s)
        return self.branch + (self.other - self.branch) * tau ** 2

    def derivatives(self, s):
        s = np.asarray(s, dtype=float)
        if self.outward:
            return 2.0 * (self.other - self.branch) * s + 0j
        return -2.0 * (self.other - self.branch) * (1.0 - s) + 0j

    def split_at(self, fractions):
        """Split at geometric fractions along start -> end."""
        if not fractions:
            return [self]
        pts = [self.start + (self.end - self.start) * u for u in [0.0, *sorted(fractions), 1.0]]
        pieces = [Segment(pts[i], pts[i + 1], self.sheet) for i in range(len(pts) - 1)]
        if self.outward:
            pieces[0] = BranchSegment(self.branch, pts[1], True, self.sheet)
        else:
            pieces[-1] = BranchSegment(self.branch, pts[-2], False, self.sheet)
        return pieces

    def reversed(self):
        return BranchSegment(self.branch, self.other, not self.outward, self.sheet)


Piece = Union[Segment, Arc, BranchSegment]


@dataclass(frozen=True)
class Contour:
    pieces: tuple
    closed: bool = False
    label: str = ""

    @property
    def start(self):
        return self.pieces[0].start

    @property
    def end(self):
        return self.pieces[-1].end

    @property
    def start_sheet(self):
        return self.pieces[0].sheet

    @property
    def end_sheet(self):
        return self.pieces[-1].sheet

    def __len__(self):
        return len(self.pieces)

    def __iter__(self):
        return iter(self.pieces)

    def reversed(self):
        return Contour(tuple(p.reversed() for p in reversed(self.pieces)), self.closed, self.label)

    def with_sheet_offset(self, offset: int, n: int = 2):
        return Contour(tuple(replace(p, sheet=(p.sheet + offset) % n) for p in self.pieces),
                       self.closed, self.label)

    def polyline(self, per_piece: int = 16):
        """Sampled (x, sheet) points for diagnostics."""
        s = np.linspace(0.0, 1.0, per_piece)
        out = []
        for p in self.pieces:
            out.extend((complex(x), p.sheet) for x in p.points(s))
        return out

    @staticmethod
    def concat(*contours, label: str = ""):
        pieces = tuple(p for c in contours for p in c.pieces)
        return Contour(pieces, False, label)
