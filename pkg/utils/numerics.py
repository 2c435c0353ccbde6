import logging
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import numpy.polynomial.polynomial as P
import scipy.linalg
from scipy.special import binom

from config import Config
from models.contour import Contour
from models.series import JetSeries, PolyRoot
from utils.errors import JetError, LinearAlgebraError, QuadratureError, RootFindingError

logger = logging.getLogger(__name__)


def poly_trim(coeffs, tol: float = 0.0) -> np.ndarray:
    """Drop vanishing leading coefficients (constant term first)"""
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    scale = np.max(np.abs(c)) if c.size else 0.0
    end = len(c)
    while end > 1 and abs(c[end - 1]) <= tol * scale:
        end -= 1
    return c[:end]


def poly_scale(coeffs, z) -> np.ndarray:
    """Coefficient scale sum |c_k| |z|^k used by residual tests"""
    return P.polyval(np.abs(z), np.abs(np.asarray(coeffs, dtype=complex)))


def _cluster(z: np.ndarray, cluster_tol: float) -> list:
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) < cluster_tol * max(1.0, abs(z[i])):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(z[i])
    roots = [PolyRoot(complex(np.mean(g)), len(g)) for g in groups.values()]
    return sorted(roots, key=lambda r: (r.value.real, r.value.imag))


def poly_roots(coeffs, tol: float = Config.ROOT_TOL, cluster_tol: float = Config.ROOT_CLUSTER_TOL,
               max_iter: int = Config.ROOT_MAX_ITER) -> list:
    """All roots by Aberth-Ehrlich iteration, companion eigenvalues as fallback.

    Roots closer than cluster_tol are merged into one PolyRoot carrying the
    cluster size as multiplicity. Results are sorted lexicographically.
    """
    c = poly_trim(coeffs)
    deg = len(c) - 1
    if deg < 1:
        raise RootFindingError(f"Polynomial degree must be at least 1, got {deg}")
    monic = c / c[-1]
    dmonic = P.polyder(monic)
    radius = abs(monic[0]) ** (1.0 / deg) if abs(monic[0]) > 0 else 1.0
    z = radius * np.exp(1j * (2 * np.pi * np.arange(deg) / deg + 0.4))

    def residual_ok(points):
        return np.all(np.abs(P.polyval(points, monic)) <= tol * poly_scale(monic, points))

    converged = False
    for it in range(max_iter):
        p = P.polyval(z, monic)
        dp = P.polyval(z, dmonic)
        dp = np.where(dp == 0, tol, dp)
        ratio = p / dp
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        repulsion = np.sum(1.0 / diff, axis=1)
        step = ratio / (1.0 - ratio * repulsion)
        z = z - step
        if residual_ok(z) or np.max(np.abs(step)) <= tol * np.max(np.maximum(1.0, np.abs(z))):
            converged = True
            logger.debug(f"Aberth converged in {it + 1} iterations for degree {deg}")
            break

    if not converged or not residual_ok(z):
        logger.warning(f"Aberth iteration did not settle for degree {deg}; using companion eigenvalues")
        z = P.polyroots(monic)
        if not residual_ok(z):
            worst = float(np.max(np.abs(P.polyval(z, monic)) / poly_scale(monic, z)))
            raise RootFindingError(f"Root finding did not converge (relative residual {worst:.2e})")
    return _cluster(z, cluster_tol)


@lru_cache(maxsize=8)
def gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def adaptive_gauss_legendre(g: Callable, a: float = 0.0, b: float = 1.0, tol: float = Config.QUAD_TOL,
                            order: int = Config.QUAD_ORDER, max_depth: int = Config.QUAD_MAX_DEPTH,
                            label: str = "segment"):
    """Adaptive Gauss-Legendre on [a, b]; g maps an array of nodes to values (..., nodes).

    Returns (value, error estimate). The error estimate is the sum of the
    |left + right - whole| differences of accepted intervals.
    """
    nodes, weights = gauss_legendre(order)

    def rule(lo, hi):
        vals = np.asarray(g(lo + (hi - lo) * nodes))
        return (hi - lo) * vals @ weights, (hi - lo) * np.abs(vals) @ weights

    whole, scale = rule(a, b)
    total = np.zeros_like(whole)
    error = 0.0
    stack = [(a, b, whole, 0)]
    ref = max(float(np.max(np.abs(scale))), 1e-300)
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left, _ = rule(lo, mid)
        right, _ = rule(mid, hi)
        gap = float(np.max(np.abs(left + right - est)))
        if gap <= tol * ref * (hi - lo) / (b - a) or gap <= 1e-15 * ref:
            total = total + left + right
            error += gap
            continue
        if depth + 1 >= max_depth:
            raise QuadratureError(
                f"Quadrature depth exhausted on {label} near s in [{lo:.6g}, {hi:.6g}] (gap {gap:.2e})")
        stack.append((mid, hi, right, depth + 1))
        stack.append((lo, mid, left, depth + 1))
    return total, error


def integrate(f: Callable, contour: Contour, tol: float = Config.QUAD_TOL, with_error: bool = False):
    """Integrate f(x, sheet) * dx along every piece of the contour.

    f returns values shaped (..., len(x)) so several integrands share nodes.
    """
    total = None
    error = 0.0
    for k, piece in enumerate(contour.pieces):
        def g(s, piece=piece):
            return np.asarray(f(piece.points(s), piece.sheet)) * piece.derivatives(s)

        value, err = adaptive_gauss_legendre(g, tol=tol, label=f"{contour.label or 'contour'} piece {k}")
        total = value if total is None else total + value
        error += err
    if total is None:
        total = 0j
    return (total, error) if with_error else total


def circle_points(rho, samples: int = Config.JET_SAMPLES) -> np.ndarray:
    """Equispaced points on |t| = rho, shaped rho.shape + (samples,)"""
    theta = 2 * np.pi * np.arange(samples) / samples
    return np.asarray(rho, dtype=float)[..., None] * np.exp(1j * theta)


def circle_jet(f: Callable, rho, order: int = Config.JET_ORDER, laurent: int = 0,
               samples: int = Config.JET_SAMPLES, center: complex = 0j,
               tail_tol: float = Config.JET_TAIL_TOL, check_tail: bool = True) -> JetSeries:
    """Laurent coefficients c_-laurent .. c_order of f(t) from samples on |t| = rho.

    f receives t shaped rho.shape + (samples,) and may add leading batch axes.
    The tail estimate is the largest normalised Fourier magnitude in the
    band samples/4 .. samples/2.
    """
    rho_arr = np.asarray(rho, dtype=float)
    t = circle_points(rho_arr, samples)
    vals = np.asarray(f(t), dtype=complex)
    spectrum = np.fft.fft(vals, axis=-1) / samples
    norm = np.max(np.abs(vals), axis=-1, keepdims=True)
    norm = np.where(norm == 0, 1.0, norm)
    band = np.abs(spectrum[..., samples // 4: samples - samples // 4 + 1]) / norm
    tail = float(np.max(band)) if band.size else 0.0
    if check_tail and tail > tail_tol:
        raise JetError(f"Jet tail estimate {tail:.2e} exceeds {tail_tol:.0e}; reduce rho or raise sample count")
    powers = np.arange(-laurent, order + 1)
    picked = spectrum[..., powers % samples]
    coeffs = picked / rho_arr[..., None] ** powers
    return JetSeries(center, rho, coeffs, -laurent, tail)


def solve_dense(matrix, rhs, residual_tol: float = Config.SOLVE_RESIDUAL_TOL,
                singular_cond: float = Config.SINGULAR_COND):
    """LU solve with residual check; returns (solution, condition number)"""
    a = np.asarray(matrix, dtype=complex)
    b = np.asarray(rhs, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinearAlgebraError(f"Expected a square matrix, got shape {a.shape}")
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > singular_cond:
        raise LinearAlgebraError(f"Matrix singular to tolerance (condition {cond:.2e})")
    x = scipy.linalg.lu_solve(scipy.linalg.lu_factor(a), b)
    scale = np.linalg.norm(a, np.inf) * np.max(np.abs(x)) + np.max(np.abs(b))
    residual = float(np.max(np.abs(a @ x - b))) if b.size else 0.0
    if residual > residual_tol * max(scale, 1e-300):
        raise LinearAlgebraError(f"Residual {residual:.2e} above tolerance (condition {cond:.2e})")
    return x, cond


# Truncated power series, constant term first

def series_mul(a, b, order: int) -> np.ndarray:
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))[:order + 1]


def series_inv(a, order: int) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a[0] == 0:
        raise ZeroDivisionError("Series with vanishing constant term has no inverse")
    out = np.zeros(order + 1, dtype=complex)
    out[0] = 1.0 / a[0]
    for k in range(1, order + 1):
        m = min(k, len(a) - 1)
        out[k] = -np.dot(a[1:m + 1], out[k - 1::-1][:m]) / a[0]
    return out


def series_div(a, b, order: int) -> np.ndarray:
    return series_mul(a, series_inv(b, order), order)


def series_sqrt1p(scale: complex, power: int, order: int) -> np.ndarray:
    """Series of sqrt(1 + t**power / scale) up to t**order"""
    out = np.zeros(order + 1, dtype=complex)
    for k in range(order // power + 1):
        out[k * power] = binom(0.5, k) * scale ** (-k)
    return out


def series_integral(a) -> np.ndarray:
    """Antiderivative vanishing at zero, one order longer"""
    a = np.asarray(a, dtype=complex)
    return np.concatenate([[0j], a / np.arange(1, len(a) + 1)])


def series_derivative(a) -> np.ndarray:
    return P.polyder(np.asarray(a, dtype=complex)) if len(a) > 1 else np.zeros(1, dtype=complex)


def taylor_shift(coeffs, center: complex) -> np.ndarray:
    """Coefficients of p(center + t) in t"""
    c = np.asarray(coeffs, dtype=complex)
    out = np.zeros(len(c), dtype=complex)
    for k in range(len(c)):
        out[k] = P.polyval(center, c)
        c = P.polyder(c) / (k + 1) if len(c) > 1 else np.zeros(1, dtype=complex)
    return out


def shifted_power_poly(center: complex, coeffs: Sequence) -> np.ndarray:
    """Polynomial sum_k coeffs[k] (x - center)**k in x"""
    out = np.zeros(1, dtype=complex)
    base = np.array([-center, 1.0], dtype=complex)
    for k, c in enumerate(coeffs):
        out = P.polyadd(out, c * P.polypow(base, k))
    return out


def lex_key(z: complex):
    return (round(z.real, 12), round(z.imag, 12))


def log_near_one(ratio) -> np.ndarray:
    """Principal logarithm after flipping sign so the argument lies near 1"""
    r = np.asarray(ratio, dtype=complex)
    return np.log(np.where(r.real < 0, -r, r))
