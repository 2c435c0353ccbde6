# models/series.py
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PolyRoot:
    value: complex
    multiplicity: int = 1

    @property
    def is_simple(self):
        return self.multiplicity == 1


@dataclass(frozen=True, eq=False)
class JetSeries:
    """Truncated Laurent series c_low .. c_high in a local parameter.

    coeffs may carry leading batch axes; the last axis runs over powers.
    """
    center: complex
    rho: object
    coeffs: np.ndarray
    low: int
    tail: float

    @property
    def high(self):
        return self.low + self.coeffs.shape[-1] - 1

    def coefficient(self, k: int):
        if k < self.low or k > self.high:
            return np.zeros(self.coeffs.shape[:-1], dtype=complex)[()]
        return self.coeffs[..., k - self.low]

    @property
    def residue(self):
        return self.coefficient(-1)

    @property
    def value(self):
        return self.coefficient(0)

    def taylor(self, order: int):
        """Coefficients c_0 .. c_order along the last axis."""
        return np.stack([self.coefficient(k) for k in range(order + 1)], axis=-1)
