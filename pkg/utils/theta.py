import itertools
from typing import List, Tuple

import numpy as np
from scipy.linalg import cholesky, eigvalsh

from config import Config
from models.differential import ThetaParams
from utils.errors import ThetaError


def characteristics(genus: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """All half-characteristics (delta', delta'') in lexicographic order of the joined vector"""
    out = []
    for bits in itertools.product((0, 1), repeat=2 * genus):
        vec = 0.5 * np.array(bits, dtype=float)
        out.append((vec[:genus], vec[genus:]))
    return out


def is_odd(characteristic) -> bool:
    d1, d2 = characteristic
    return int(round(4 * float(np.dot(d1, d2)))) % 2 == 1


def lattice_box(omega: np.ndarray, z: np.ndarray, delta1: np.ndarray, radius: float, cap: int) -> int:
    """Half-width of the integer box covering the ellipsoid that carries the lattice sum"""
    Y = omega.imag
    cholesky(Y, lower=True)  # raises on a non-positive-definite imaginary part
    lam_min = float(eigvalsh(Y)[0])
    centres = -np.linalg.solve(Y, np.atleast_2d(z).imag.T).T - delta1
    width = int(np.ceil(radius / np.sqrt(lam_min)) + np.ceil(np.max(np.abs(centres), initial=0.0)) + 1)
    if width > cap:
        raise ThetaError(f"Theta lattice half-width {width} exceeds cap {cap}")
    return width


def theta_terms(z, params: ThetaParams, order: int = 2):
    """Scaled theta sums at points z (..., g).

    Returns (value, gradient, hessian, log_scale); the true quantities are
    these times exp(log_scale).
    """
    omega = np.asarray(params.omega, dtype=complex)
    g = omega.shape[0]
    if g > Config.THETA_MAX_GENUS:
        raise ThetaError(f"Theta evaluation supports genus up to {Config.THETA_MAX_GENUS}, got {g}")
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1, g)
    d1, d2 = params.delta1, params.delta2
    try:
        width = lattice_box(omega, flat, d1, params.radius, params.cap)
    except np.linalg.LinAlgError as e:
        raise ThetaError(f"Imaginary part of the period matrix is not positive definite: {str(e)}")
    grid = np.array(list(itertools.product(range(-width, width + 1), repeat=g)), dtype=float) + d1
    quad = np.pi * 1j * np.einsum('la,ab,lb->l', grid, omega, grid)
    lin = 2j * np.pi * (flat + d2) @ grid.T
    exponent = quad[None, :] + lin
    log_scale = np.max(exponent.real, axis=1)
    weights = np.exp(exponent - log_scale[:, None])
    value = weights.sum(axis=1)
    shape = z.shape[:-1]
    out = [value.reshape(shape)]
    if order >= 1:
        grad = 2j * np.pi * weights @ grid
        out.append(grad.reshape(shape + (g,)))
    if order >= 2:
        hess = (2j * np.pi) ** 2 * np.einsum('pl,la,lb->pab', weights, grid, grid)
        out.append(hess.reshape(shape + (g, g)))
    while len(out) < 3:
        out.append(None)
    out.append(log_scale.reshape(shape))
    return tuple(out)


def theta(z, params: ThetaParams, order: int = 0):
    """theta[delta](z | omega) and, for order >= 1, its gradient and Hessian"""
    value, grad, hess, log_scale = theta_terms(z, params, order)
    factor = np.exp(log_scale)
    if order == 0:
        return value * factor
    if order == 1:
        return value * factor, grad * factor[..., None]
    return value * factor, grad * factor[..., None], hess * factor[..., None, None]


def log_theta_derivatives(z, params: ThetaParams):
    """Gradient and Hessian of ln theta[delta] at z"""
    value, grad, hess, _ = theta_terms(z, params, 2)
    first = grad / value[..., None]
    second = hess / value[..., None, None] - first[..., :, None] * first[..., None, :]
    return first, second


def lattice_reduce(z, omega: np.ndarray) -> np.ndarray:
    """Representative of z modulo Z^g + Omega Z^g: imaginary part in the cell of Im Omega, real part in [-1/2, 1/2]"""
    z = np.asarray(z, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    m = np.rint(np.linalg.solve(omega.imag, z.imag))
    shifted = z - omega @ m
    return shifted - np.rint(shifted.real)
