import numpy as np
import pytest

from models.differential import ThetaParams
from utils.theta import characteristics, is_odd, lattice_reduce, theta

OMEGA = np.array([[0.3 + 1.1j, 0.2 + 0.35j], [0.2 + 0.35j, -0.15 + 0.9j]])
Z = np.array([0.11 - 0.07j, -0.23 + 0.05j])


@pytest.mark.parametrize("char", characteristics(2))
def test_theta_quasi_periodicity(char):
    d1, d2 = char
    params = ThetaParams(OMEGA, char)
    base = complex(theta(Z, params))
    for k in range(2):
        unit = np.eye(2)[k]
        shifted = complex(theta(Z + unit, params))
        assert abs(shifted - np.exp(2j * np.pi * d1[k]) * base) < 1e-11 * max(1.0, abs(base))
        factor = np.exp(-1j * np.pi * OMEGA[k, k] - 2j * np.pi * (Z[k] + d2[k]))
        jumped = complex(theta(Z + OMEGA @ unit, params))
        assert abs(jumped - factor * base) < 1e-11 * max(1.0, abs(jumped))


@pytest.mark.parametrize("char", characteristics(2))
def test_theta_parity(char):
    params = ThetaParams(OMEGA, char)
    sign = -1.0 if is_odd(char) else 1.0
    value = complex(theta(Z, params))
    assert abs(complex(theta(-Z, params)) - sign * value) < 1e-12 * max(1.0, abs(value))


def test_odd_theta_vanishes_at_zero():
    odd = [c for c in characteristics(2) if is_odd(c)]
    assert len(odd) == 6
    for char in odd:
        assert abs(complex(theta(np.zeros(2), ThetaParams(OMEGA, char)))) < 1e-13


def test_lattice_reduce_removes_periods():
    n, m = np.array([2.0, -1.0]), np.array([-1.0, 3.0])
    reduced = lattice_reduce(Z + n + OMEGA @ m, OMEGA)
    assert np.allclose(reduced, lattice_reduce(Z, OMEGA), atol=1e-13)
    assert np.allclose(lattice_reduce(n + OMEGA @ m, OMEGA), 0, atol=1e-13)
    assert np.allclose(lattice_reduce(Z, OMEGA), Z, atol=1e-15)
