# models/differential.py
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.polynomial.polynomial as P


@dataclass(frozen=True, eq=False)
class RationalTerm:
    """(num0(x) + num1(x) / w) / den(x), relative to dx"""
    num0: np.ndarray
    num1: np.ndarray
    den: np.ndarray

    @staticmethod
    def of(num0=(0,), num1=(0,), den=(1,)):
        return RationalTerm(np.asarray(num0, dtype=complex), np.asarray(num1, dtype=complex),
                            np.asarray(den, dtype=complex))

    def evaluate(self, x, w):
        x = np.asarray(x, dtype=complex)
        return (P.polyval(x, self.num0) + P.polyval(x, self.num1) / w) / P.polyval(x, self.den)

    def scaled(self, c: complex):
        return RationalTerm(c * self.num0, c * self.num1, self.den)


@dataclass(frozen=True)
class SingularPart:
    """Principal part at a surface point in the chart x - y: sum_l coeffs[l-1] / (x - y)^l"""
    point: object
    coeffs: tuple


@dataclass(frozen=True, eq=False)
class Differential:
    label: str
    terms: tuple
    ledger: tuple = ()
    a_periods: Optional[np.ndarray] = None

    def evaluate(self, x, w):
        x = np.asarray(x, dtype=complex)
        total = np.zeros(np.broadcast(x, w).shape, dtype=complex)
        for term in self.terms:
            total = total + term.evaluate(x, w)
        return total

    def scaled(self, c: complex, label: str = None):
        return Differential(label or self.label, tuple(t.scaled(c) for t in self.terms),
                            tuple(SingularPart(s.point, tuple(c * v for v in s.coeffs)) for s in self.ledger),
                            None if self.a_periods is None else c * self.a_periods)

    def plus(self, other, label: str = None):
        a = None
        if self.a_periods is not None and other.a_periods is not None:
            a = self.a_periods + other.a_periods
        return Differential(label or self.label, self.terms + other.terms, self.ledger + other.ledger, a)

    @property
    def residue_sum(self):
        return sum(s.coeffs[0] for s in self.ledger if s.coeffs)


@dataclass(eq=False)
class ThetaParams:
    omega: np.ndarray
    characteristic: tuple = ()  # (delta', delta'') as arrays, empty for zero characteristic
    radius: float = 4.0
    cap: int = 12

    @property
    def genus(self):
        return self.omega.shape[0]

    @property
    def delta1(self):
        return np.zeros(self.genus) if not self.characteristic else np.asarray(self.characteristic[0])

    @property
    def delta2(self):
        return np.zeros(self.genus) if not self.characteristic else np.asarray(self.characteristic[1])

    @property
    def is_odd(self):
        return int(round(4 * float(np.dot(self.delta1, self.delta2)))) % 2 == 1


@dataclass(eq=False)
class PeriodData:
    raw_a: np.ndarray  # a-periods of x^k dx / w
    raw_b: np.ndarray
    normalization: np.ndarray  # v_alpha = sum_k normalization[alpha, k] x^k dx / w
    omega: np.ndarray
    basis: tuple  # normalized Differentials
    gram_condition: float = 0.0
    v_a_periods: Optional[np.ndarray] = None
    v_b_periods: Optional[np.ndarray] = None

    @property
    def genus(self):
        return self.omega.shape[0]


@dataclass(frozen=True, eq=False)
class BranchJet:
    """Taylor data at a ramification point in t with x = e + t^2.

    y: coefficients of v/dx, g: rows of v_alpha/dt, projective: S_B in t at 0.
    """
    index: int
    point: complex
    scale: complex  # K with K^2 = D'(e)
    rho: float
    y: np.ndarray
    g: np.ndarray
    projective: complex = 0j

    @property
    def a(self):
        return self.y[0]

    @property
    def b(self):
        return self.y[1]

    @property
    def y_prime(self):
        return self.y[1]

    @property
    def y_third(self):
        return 6.0 * self.y[3]

    @property
    def values(self):
        return self.g[:, 0]

    @property
    def second(self):
        return 2.0 * self.g[:, 2]
