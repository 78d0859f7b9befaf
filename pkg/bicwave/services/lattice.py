"""
Quasi-periodic lattice sums T^G(omega, beta) for the lattice a = (L, 0).

The Schlomilch series sum_{n != 0} O_m(-n a) e^{i n beta} converges slowly
(not at all for complex beta), so production values split it into the
terms 1 <= |n| <= s-1 plus a Fourier integral for |n| >= s taken along the
steepest-descent path xi = +-Q(t), Q(t)^2 = t^2 - 2ikt. On that path
R(xi) = t - ik, the geometric tails decay like e^{-sLt}, and a
double-exponential substitution absorbs the t^{-1/2} endpoint singularity.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from bicwave.core.config import Config, settings
from bicwave.core.errors import BranchCutError, DomainError, QuadratureError, ValidationError
from bicwave.models.lattice import LatticeSum, toeplitz_from_orders
from bicwave.services.cylwave import hankel1

logger = logging.getLogger(__name__)

# Nodes with s*L*t beyond this contribute below double precision
_DECAY_CUTOFF = 700.0
_DIRECT_CHUNK = 20000
# Cancellation allowance, in ulps of the sum of |terms|
_ROUNDOFF_FACTOR = 1e3


@dataclass(frozen=True)
class LatticeQuadrature:
    """Double-exponential rule settings."""

    tau_max: float = 4.0
    tol: float = 1e-12
    # accepted once the halving changes stall at round-off below this
    floor_tol: float = 1e-10
    max_halvings: int = 12
    initial_step: float = 0.5
    exclusion: float = 1e-8

    @classmethod
    def from_config(cls, config: Config = settings) -> "LatticeQuadrature":
        return cls(
            tau_max=config.LATTICE_TAU_MAX,
            tol=config.LATTICE_QUAD_TOL,
            floor_tol=config.LATTICE_FLOOR_TOL,
            max_halvings=config.LATTICE_MAX_HALVINGS,
            exclusion=config.BRANCH_EXCLUSION,
        )


DEFAULT_LATTICE_QUADRATURE = LatticeQuadrature.from_config()


def _order_differences(n_tr: int) -> np.ndarray:
    return np.arange(-2 * n_tr, 2 * n_tr + 1)


# ---------------------------------------------------------------------------
# Direct (oracle) summation
# ---------------------------------------------------------------------------


def lattice_sum_direct(omega: float, beta: float, L: float, n_tr: int,
                       n_max: int = 1_000_000, c: float = 1.0,
                       averaged: bool = True) -> np.ndarray:
    """
    Truncated Schlomilch series, for validation only.

    The symmetric partial sums oscillate with amplitude ~ n^{-1/2}; with
    ``averaged`` the result is the mean of the partial sums over
    n_max/2..n_max, which removes most of that oscillation.

    Raises:
        DomainError: complex omega or beta (the series diverges)
    """
    if complex(omega).imag != 0 or complex(beta).imag != 0:
        raise DomainError("Direct lattice summation diverges for complex omega or beta")
    omega, beta = float(complex(omega).real), float(complex(beta).real)
    if not omega > 0 or not L > 0:
        raise ValidationError("lattice_sum_direct needs omega > 0 and L > 0")
    if n_max < 1:
        raise ValidationError(f"n_max must be positive, got {n_max}")

    k = omega / c
    m = _order_differences(n_tr)
    sign = (-1.0) ** np.abs(m)
    first_averaged = n_max // 2 + 1
    totals = np.zeros(m.size, dtype=complex)

    for start in range(1, n_max + 1, _DIRECT_CHUNK):
        n = np.arange(start, min(start + _DIRECT_CHUNK, n_max + 1))
        weights = np.ones(n.size)
        if averaged:
            tail = n > first_averaged
            weights[tail] = (n_max - n[tail] + 1) / (n_max - first_averaged + 1)
        h = hankel1(m[:, None], k * L * n[None, :])
        phase = sign[:, None] * np.exp(1j * n * beta)[None, :] + np.exp(-1j * n * beta)[None, :]
        totals += (h * phase) @ weights

    return toeplitz_from_orders(totals, n_tr)


# ---------------------------------------------------------------------------
# Branch cuts
# ---------------------------------------------------------------------------


def _branch_points(beta: complex, omega: complex, L: float, c: float):
    """Nearby branch points as (m, direction, point) with direction +1 (cut up) or -1."""
    kl = complex(omega) / c * L
    out = []
    for direction, base in ((1, kl), (-1, -kl)):
        m0 = int(math.floor((complex(beta).real - base.real) / (2 * math.pi)))
        for m in range(m0 - 2, m0 + 4):
            out.append((m, direction, base + 2 * math.pi * m))
    return out


def _distance_to_cut(beta: complex, point: complex, direction: int) -> float:
    above = (beta.imag - point.imag) * direction >= 0
    if above:
        return abs(beta.real - point.real)
    return abs(beta - point)


def branch_cut_distance(beta: complex, omega: complex, L: float, c: float = 1.0) -> float:
    """
    Distance from beta to the cut set {+-kL + 2m*pi +- iy, y >= 0}.
    """
    beta = complex(beta)
    return min(_distance_to_cut(beta, p, d) for _, d, p in _branch_points(beta, omega, L, c))


def check_branch_cuts(beta: complex, omega: complex, L: float, c: float = 1.0,
                      exclusion: float = 1e-8) -> None:
    """Raise BranchCutError when beta lies within ``exclusion`` of a cut."""
    beta = complex(beta)
    for m, direction, point in _branch_points(beta, omega, L, c):
        dist = _distance_to_cut(beta, point, direction)
        if dist < exclusion:
            sign = "+" if direction > 0 else "-"
            raise BranchCutError(
                f"beta={beta:.6g} is {dist:.2e} from the branch cut {sign}kL + 2*{m}*pi",
                {"m": m, "direction": sign, "branch_point": [point.real, point.imag]},
            )


def contour_cut_crossings(center: complex, radius: float, omega: complex, L: float,
                          c: float = 1.0) -> List[Dict]:
    """
    Branch cuts that intersect the circle |beta - center| = radius.

    A cut passing between two quadrature nodes is not seen by per-node
    distance checks, so eigensolver contours are screened with this first.
    """
    center = complex(center)
    crossings = []
    for m, direction, point in _branch_points(center, omega, L, c):
        dx = point.real - center.real
        if abs(dx) > radius:
            continue
        half = math.sqrt(radius * radius - dx * dx)
        ys = (center.imag - half, center.imag + half)
        if any((y - point.imag) * direction >= 0 for y in ys):
            crossings.append({
                "m": m,
                "direction": "+" if direction > 0 else "-",
                "branch_point": [point.real, point.imag],
            })
    return crossings


# ---------------------------------------------------------------------------
# Integral representation
# ---------------------------------------------------------------------------


def _finite_terms(k: complex, beta: complex, L: float, m: np.ndarray, s: int):
    """Sum over 1 <= |n| <= s-1 and its beta-derivative."""
    values = np.zeros(m.size, dtype=complex)
    derivs = np.zeros(m.size, dtype=complex)
    sign = (-1.0) ** np.abs(m)
    for n in range(1, s):
        h = hankel1(m, k * n * L)
        forward, backward = np.exp(1j * n * beta), np.exp(-1j * n * beta)
        values += h * (sign * forward + backward)
        derivs += 1j * n * h * (sign * forward - backward)
    return values, derivs


def _path_integrand(t: np.ndarray, k: complex, beta: complex, L: float, m: np.ndarray, s: int):
    """
    Integrand in t (orders along axis 0, nodes along axis 1) for the value
    and the beta-derivative, without the dt/dtau factor.
    """
    q = np.sqrt(t * t - 2j * k * t)
    r = t - 1j * k
    plus, minus = q + r, q - r
    # (Q + R)(Q - R) = k^2; form the small factor from the large one
    big_plus = np.abs(plus) >= np.abs(minus)
    a = np.where(big_plus, plus, k * k / np.where(big_plus, 1.0, minus))
    log_w = np.log(a / k)

    # e^{s(+-i beta - R L)} w^{+-m}, combined in log form to keep large
    # orders from overflowing before the exponential decay applies
    log_fwd = s * (1j * beta - r * L)
    log_bwd = s * (-1j * beta - r * L)
    e_fwd = np.exp(1j * beta - r * L)
    e_bwd = np.exp(-1j * beta - r * L)

    sign = ((-1.0) ** np.abs(m))[:, None]
    mlw = m[:, None] * log_w[None, :]
    shape_fwd = np.exp(log_fwd - mlw) + sign * np.exp(log_fwd + mlw)
    shape_bwd = np.exp(log_bwd + mlw) + sign * np.exp(log_bwd - mlw)

    value = (shape_fwd / (1.0 - e_fwd) + shape_bwd / (1.0 - e_bwd)) / q
    d_fwd = 1j * (s / (1.0 - e_fwd) + e_fwd / (1.0 - e_fwd) ** 2)
    d_bwd = -1j * (s / (1.0 - e_bwd) + e_bwd / (1.0 - e_bwd) ** 2)
    deriv = (shape_fwd * d_fwd + shape_bwd * d_bwd) / q
    return value, deriv


def _de_nodes(h: float, tau_max: float, offset: float = 0.0):
    tau = np.arange(-tau_max + offset, tau_max + 1e-12, h)
    t = np.exp(0.5 * np.pi * np.sinh(tau))
    jac = 0.5 * np.pi * np.cosh(tau) * t
    return tau, t, jac


def _de_sum(k, beta, L, m, s, h, tau_max, offset=0.0):
    tau, t, jac = _de_nodes(h, tau_max, offset)
    keep = s * L * t <= _DECAY_CUTOFF
    value, deriv = _path_integrand(t[keep], k, beta, L, m, s)
    return value @ jac[keep], deriv @ jac[keep], np.abs(value) @ jac[keep]


def _tail_integral(k: complex, beta: complex, L: float, m: np.ndarray, s: int,
                   quadrature: LatticeQuadrature):
    """
    Trapezoid sums on the double-exponential grid, halving the step.

    Converged when a halving changes the entries by at most ``tol`` (relative
    to max(1, |entries|)) or by no more than cancellation error in the sum of
    |terms|. A change that stops shrinking while already below ``floor_tol``
    is accepted as the round-off floor.
    """
    h = quadrature.initial_step
    raw_v, raw_d, raw_abs = _de_sum(k, beta, L, m, s, h, quadrature.tau_max)
    estimate_v, estimate_d = h * raw_v, h * raw_d
    previous = math.inf
    for halving in range(1, quadrature.max_halvings + 1):
        mid_v, mid_d, mid_abs = _de_sum(k, beta, L, m, s, h, quadrature.tau_max, offset=0.5 * h)
        raw_v, raw_d, raw_abs = raw_v + mid_v, raw_d + mid_d, raw_abs + mid_abs
        h *= 0.5
        new_v, new_d = h * raw_v, h * raw_d
        scale = max(1.0, float(np.max(np.abs(new_v))))
        roundoff = _ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.max(h * raw_abs))
        change = float(np.max(np.abs(new_v - estimate_v)))
        estimate_v, estimate_d = new_v, new_d
        if change <= max(quadrature.tol * scale, roundoff):
            return estimate_v, estimate_d, halving
        if change <= quadrature.floor_tol * scale and change >= 0.5 * previous:
            logger.debug(f"Lattice quadrature stalled at {change:.2e} after {halving} halvings")
            return estimate_v, estimate_d, halving
        previous = change
    raise QuadratureError(
        f"Lattice-sum quadrature did not reach {quadrature.tol:g} after "
        f"{quadrature.max_halvings} halvings",
        {"omega": [k.real, k.imag], "beta": [beta.real, beta.imag], "last_change": change},
    )


def lattice_sum_integral(omega: complex, beta: complex, L: float, n_tr: int, s: int = 2,
                         c: float = 1.0,
                         quadrature: Optional[LatticeQuadrature] = None) -> LatticeSum:
    """
    T^G and dT^G/dbeta from the steepest-descent integral representation.

    Args:
        omega, beta: complex frequency and Floquet wavenumber
        L: period
        n_tr: truncation order (matrix size 2 n_tr + 1)
        s: split index, finite terms for |n| < s
        c: exterior sound speed

    Raises:
        BranchCutError: beta within the exclusion radius of a cut
        QuadratureError: the double-exponential rule did not converge
    """
    quadrature = quadrature or DEFAULT_LATTICE_QUADRATURE
    if s < 2:
        raise ValidationError(f"Split index s must be >= 2, got {s}")
    if not L > 0:
        raise ValidationError(f"Period must be positive, got {L}")
    omega, beta = complex(omega), complex(beta)
    if omega == 0:
        raise ValidationError("omega must be nonzero")
    check_branch_cuts(beta, omega, L, c, quadrature.exclusion)

    k = omega / c
    m = _order_differences(n_tr)
    finite_v, finite_d = _finite_terms(k, beta, L, m, s)
    tail_v, tail_d, halvings = _tail_integral(k, beta, L, m, s, quadrature)
    # 1/(pi i) prefactor of the Fourier representation
    values = finite_v + tail_v / (1j * np.pi)
    derivs = finite_d + tail_d / (1j * np.pi)

    logger.debug(f"Lattice sum omega={omega:.6g} beta={beta:.6g}: {halvings} halvings")
    return LatticeSum(
        toeplitz_from_orders(values, n_tr),
        toeplitz_from_orders(derivs, n_tr),
        omega, beta, L, s, halvings,
    )


def lattice_sum_dbeta(omega: complex, beta: complex, L: float, n_tr: int, s: int = 2,
                      c: float = 1.0, quadrature: Optional[LatticeQuadrature] = None) -> np.ndarray:
    """Analytic dT^G/dbeta."""
    return lattice_sum_integral(omega, beta, L, n_tr, s, c, quadrature).d_beta_entries


def integrand_samples(omega: complex, beta: complex, L: float, n_tr: int, s: int = 2,
                      c: float = 1.0, step: float = 0.0625,
                      quadrature: Optional[LatticeQuadrature] = None) -> Dict[str, np.ndarray]:
    """
    Path integrand on a fixed double-exponential grid, for quadrature debugging.

    Returns:
        dict with ``tau``, ``t``, ``orders`` and ``integrand`` of shape
        (orders, nodes), the dt/dtau factor included
    """
    quadrature = quadrature or DEFAULT_LATTICE_QUADRATURE
    omega, beta = complex(omega), complex(beta)
    check_branch_cuts(beta, omega, L, c, quadrature.exclusion)
    k = omega / c
    m = _order_differences(n_tr)
    tau, t, jac = _de_nodes(step, quadrature.tau_max)
    keep = s * L * t <= _DECAY_CUTOFF
    value, _ = _path_integrand(t[keep], k, beta, L, m, s)
    return {
        "tau": tau[keep],
        "t": t[keep],
        "orders": m,
        "integrand": value * jac[keep][None, :],
    }
