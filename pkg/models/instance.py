# models/instance.py
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Pole:
    x: complex
    k: int


@dataclass(frozen=True, eq=False)
class InstanceSpec:
    label: str
    n: int
    poles: tuple
    numerators: tuple  # N_1 .. N_n, constant term first
    residue_free: bool = False
    source: str = ""

    @property
    def total_order(self):
        return sum(p.k for p in self.poles)

    def pole_polynomial(self) -> np.ndarray:
        """P(x) = prod (x - y_j)^k_j"""
        poly = np.ones(1, dtype=complex)
        for pole in self.poles:
            for _ in range(pole.k):
                poly = np.convolve(poly, [-pole.x, 1.0])
        return poly

    def with_numerators(self, numerators, label: str = None):
        return InstanceSpec(label or self.label, self.n, self.poles,
                            tuple(np.asarray(c, dtype=complex) for c in numerators),
                            self.residue_free, self.source)

    def to_document(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "poles": [{"x": [p.x.real, p.x.imag], "k": p.k} for p in self.poles],
            "Q": [{"ell": ell + 1, "numer": [[c.real, c.imag] for c in numer]}
                  for ell, numer in enumerate(self.numerators)],
        }


@dataclass(frozen=True)
class DerivedCounts:
    n: int
    total_order: int
    branch_points: int
    genus: int
    zeros: int
    dim: int
    coefficient_dims: tuple = field(default_factory=tuple)

    def as_dict(self):
        return {
            "n": self.n, "K": self.total_order, "p": self.branch_points, "genus": self.genus,
            "r": self.zeros, "dim": self.dim, "coefficient_dims": list(self.coefficient_dims),
        }


@dataclass
class GenericityReport:
    passed: bool = True
    failures: list = field(default_factory=list)  # (message, locations)

    def fail(self, message: str, locations=()):
        self.passed = False
        self.failures.append((message, [complex(z) for z in locations]))
