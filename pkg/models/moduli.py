# models/moduli.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class CoordinateDirection:
    """One coordinate of the moduli chart.

    kind 'A': index = alpha. kind 'C': pole j, sheet s, order ell.
    """
    kind: str
    index: int = 0
    pole: int = 0
    sheet: int = 0
    order: int = 1

    @property
    def name(self):
        if self.kind == 'A':
            return f"A{self.index}"
        return f"C{self.pole}.{self.sheet}.{self.order}"

    @property
    def is_dependent(self):
        return self.kind == 'C' and (self.pole, self.sheet, self.order) == (0, 0, 1)

    @staticmethod
    def parse(name: str):
        if name.startswith('A'):
            return CoordinateDirection('A', index=int(name[1:]))
        if name.startswith('C'):
            j, s, ell = (int(v) for v in name[1:].split('.'))
            return CoordinateDirection('C', pole=j, sheet=s, order=ell)
        raise ValueError(f"Unknown coordinate name {name!r}")


@dataclass(eq=False)
class ModuliPoint:
    directions: tuple
    values: np.ndarray
    dependent: complex = 0j  # C_0^(0),1, fixed by the residue theorem

    def __len__(self):
        return len(self.directions)

    def index_of(self, direction: CoordinateDirection) -> int:
        return self.directions.index(direction)

    def value_of(self, direction: CoordinateDirection) -> complex:
        return complex(self.values[self.index_of(direction)])

    def shifted(self, direction: CoordinateDirection, step: complex):
        values = np.array(self.values, dtype=complex)
        values[self.index_of(direction)] += step
        return ModuliPoint(self.directions, values, self.dependent)

    def scaled(self, factor: complex):
        return ModuliPoint(self.directions, factor * np.asarray(self.values), factor * self.dependent)

    def residue_sum(self) -> complex:
        residues = [v for d, v in zip(self.directions, self.values) if d.kind == 'C' and d.order == 1]
        return complex(sum(residues) + self.dependent)

    def as_dict(self):
        return {d.name: [complex(v).real, complex(v).imag] for d, v in zip(self.directions, self.values)}


@dataclass(eq=False)
class CoordJacobian:
    matrix: np.ndarray  # d(coordinates)/d(coefficients)
    condition: float
    unknowns: tuple = ()  # (ell, power) per column


@dataclass(eq=False)
class FDResult:
    value: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray
    gap: float
    eps: float
    extra: Optional[dict] = field(default=None)
