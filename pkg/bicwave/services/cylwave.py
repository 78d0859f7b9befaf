"""
Cylindrical special functions, multipole bases and translation operators.

All functions accept numpy arrays and broadcast; scalar inputs give scalar
outputs. The supported window is |n| <= 200 and |Im z| <= 700; inside it the
scipy AMOS routines are accurate to ~1e-13 relative for |z| <= 100. Outside
the window an OutOfRangeError is raised rather than returning inf/nan.
"""

import logging
from typing import Tuple, Union

import numpy as np
from scipy import special

from bicwave.core.errors import OutOfRangeError, SingularArgumentError, ValidationError
from bicwave.models.multipole import MultipoleVector, TranslationMatrix

logger = logging.getLogger(__name__)

MAX_ORDER = 200
MAX_IMAG = 700.0

ArrayLike = Union[complex, np.ndarray]


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------


def _check_window(n, z) -> Tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n)
    if not np.issubdtype(n.dtype, np.integer):
        if not np.all(np.equal(np.mod(n, 1), 0)):
            raise ValidationError("Only integer Bessel orders are supported")
        n = n.astype(int)
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(n) > MAX_ORDER):
        raise OutOfRangeError(
            f"Bessel order outside supported window |n| <= {MAX_ORDER}",
            {"max_order": int(np.max(np.abs(n)))},
        )
    if not np.all(np.isfinite(z)):
        raise OutOfRangeError("Non-finite Bessel argument")
    if np.any(np.abs(z.imag) > MAX_IMAG):
        raise OutOfRangeError(
            f"|Im z| exceeds {MAX_IMAG}; result would overflow",
            {"max_imag": float(np.max(np.abs(z.imag)))},
        )
    return n, z


def _finite(values: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise OutOfRangeError(f"{name} overflowed inside the evaluation window")
    return values


def bessel_j(n, z) -> ArrayLike:
    """Bessel function J_n(z) of integer order and complex argument."""
    n, z = _check_window(n, z)
    return _finite(special.jv(n, z), "J_n")


def bessel_y(n, z) -> ArrayLike:
    """Neumann function Y_n(z); z must be nonzero."""
    n, z = _check_window(n, z)
    if np.any(z == 0):
        raise SingularArgumentError("Y_n is singular at z = 0")
    return _finite(special.yv(n, z), "Y_n")


def hankel1(n, z) -> ArrayLike:
    """Hankel function of the first kind H1_n(z) = J_n(z) + i Y_n(z)."""
    n, z = _check_window(n, z)
    if np.any(z == 0):
        raise SingularArgumentError("H1_n is singular at z = 0")
    return _finite(special.hankel1(n, z), "H1_n")


def bessel_j_prime(n, z) -> ArrayLike:
    """J'_n(z) = (J_{n-1}(z) - J_{n+1}(z)) / 2."""
    n = np.asarray(n)
    return 0.5 * (bessel_j(n - 1, z) - bessel_j(n + 1, z))


def hankel1_prime(n, z) -> ArrayLike:
    """H1'_n(z) = (H1_{n-1}(z) - H1_{n+1}(z)) / 2."""
    n = np.asarray(n)
    return 0.5 * (hankel1(n - 1, z) - hankel1(n + 1, z))


# ---------------------------------------------------------------------------
# Multipole bases I_n, O_n
# ---------------------------------------------------------------------------


def polar(points) -> Tuple[np.ndarray, np.ndarray]:
    """Radius and angle in (-pi, pi] of points with shape (..., 2)."""
    pts = np.asarray(points, dtype=float)
    x = pts[..., 0] + 0.0
    y = pts[..., 1] + 0.0  # drop negative zeros so the angle never hits -pi
    return np.hypot(x, y), np.arctan2(y, x)


def cylindrical_waves(orders, k: complex, points, kind: str = "regular",
                      gradient: bool = False):
    """
    Evaluate I_n or O_n for several orders at several points.

    Parameters
    ----------
    orders : array of int, shape (P,)
    k : complex wavenumber
    points : array, shape (M, 2), coordinates relative to the expansion center
    kind : "regular" (J_n based) or "outgoing" (H1_n based)
    gradient : also return the gradient

    Returns
    -------
    values : (M, P) complex
    grad : (M, 2, P) complex, only when ``gradient`` is true
    """
    orders = np.atleast_1d(np.asarray(orders, dtype=int))
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    r, theta = polar(pts)
    z = complex(k) * r

    if kind == "regular":
        radial = bessel_j
    elif kind == "outgoing":
        if np.any(r == 0):
            raise SingularArgumentError("O_n is singular at the expansion center")
        radial = hankel1
    else:
        raise ValidationError(f"Unknown wave kind '{kind}'")

    lo = int(orders.min()) - (1 if gradient else 0)
    hi = int(orders.max()) + (1 if gradient else 0)
    full = np.arange(lo, hi + 1)
    table = radial(full[None, :], z[:, None]) * np.exp(1j * full[None, :] * theta[:, None])

    idx = orders - lo
    values = table[:, idx]
    if not gradient:
        return values

    # (d1 + i d2) W_n = -k W_{n+1},  (d1 - i d2) W_n = k W_{n-1}
    w_minus = table[:, idx - 1]
    w_plus = table[:, idx + 1]
    k = complex(k)
    grad = np.stack([0.5 * k * (w_minus - w_plus), 0.5j * k * (w_minus + w_plus)], axis=1)
    return values, grad


def regular_wave(n: int, k: complex, x) -> complex:
    """I_n(x) = J_n(k|x|) e^{i n theta(x)}."""
    return cylindrical_waves([n], k, x, "regular")[0, 0]


def regular_wave_gradient(n: int, k: complex, x) -> np.ndarray:
    _, grad = cylindrical_waves([n], k, x, "regular", gradient=True)
    return grad[0, :, 0]


def outgoing_wave(n: int, k: complex, x) -> complex:
    """O_n(x) = H1_n(k|x|) e^{i n theta(x)}."""
    return cylindrical_waves([n], k, x, "outgoing")[0, 0]


def outgoing_wave_gradient(n: int, k: complex, x) -> np.ndarray:
    _, grad = cylindrical_waves([n], k, x, "outgoing", gradient=True)
    return grad[0, :, 0]


def expansion_field(vector: MultipoleVector, points, kind: str = "regular",
                    gradient: bool = False):
    """
    Sum_n coeffs_n W_n(x - center) for W = I (regular) or O (outgoing).

    Returns values of shape (M,) and, optionally, gradients (M, 2).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2) - vector.center
    result = cylindrical_waves(vector.orders, vector.k, pts, kind, gradient)
    if not gradient:
        return result @ vector.coeffs
    values, grad = result
    return values @ vector.coeffs, grad @ vector.coeffs


# ---------------------------------------------------------------------------
# Translation operators and incident coefficients
# ---------------------------------------------------------------------------


def translation_matrix(k: complex, displacement, n_tr: int) -> TranslationMatrix:
    """
    Graf translation T^(ji) with entries[n][m] = O_{m-n}(x0_j - x0_i).

    Sum_n B_n O_n(x - x0_i) = Sum_m (T B)_m I_m(x - x0_j) for |x - x0_j| < |d|.
    """
    d = np.asarray(displacement, dtype=float)
    if np.hypot(*d) == 0:
        raise SingularArgumentError("Translation displacement must be nonzero")
    offsets = np.arange(-2 * n_tr, 2 * n_tr + 1)
    table = cylindrical_waves(offsets, k, d[None, :], "outgoing")[0]
    orders = np.arange(-n_tr, n_tr + 1)
    idx = orders[None, :] - orders[:, None] + 2 * n_tr
    return TranslationMatrix(table[idx], d, k)


def plane_wave_coeffs(p, n_tr: int, k: complex = 1.0, center=(0.0, 0.0)) -> MultipoleVector:
    """
    Regular-wave coefficients of e^{i k p.(x - center)}: A_n = (p2 + i p1)^n.

    Args:
        p: unit propagation direction
        n_tr: truncation order
        k: wavenumber stored with the vector
        center: expansion center

    Returns:
        MultipoleVector of length 2*n_tr + 1
    """
    p = np.asarray(p, dtype=float)
    if abs(np.hypot(*p) - 1.0) > 1e-12:
        raise ValidationError(f"Plane-wave direction must be a unit vector, got {p.tolist()}")
    base = p[1] + 1j * p[0]
    orders = np.arange(-n_tr, n_tr + 1)
    return MultipoleVector(base ** orders, center, k)


def point_source_coeffs(x_src, x0, k: complex, n_tr: int) -> MultipoleVector:
    """
    Coefficients of H1_0(k|x - x_src|) about x0: A_m = H1_m(k|d|) e^{-i m theta(d)}.

    Valid inside |x - x0| < |x_src - x0|.
    """
    d = np.asarray(x_src, dtype=float) - np.asarray(x0, dtype=float)
    r, theta = polar(d)
    if r == 0:
        raise SingularArgumentError("Point source coincides with the expansion center")
    orders = np.arange(-n_tr, n_tr + 1)
    coeffs = hankel1(orders, complex(k) * r) * np.exp(-1j * orders * theta)
    return MultipoleVector(coeffs, x0, k)
