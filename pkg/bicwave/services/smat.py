"""
Scattering matrices of a single scatterer.

BEM-backed matrices solve one transmission problem per incident order
I_{n'} against a single factorization and read off outgoing coefficients
through B_n = (i(-1)^n / 4) <I_{-n}, u>. Circles also have a partial-wave
(analytic) matrix used as an oracle and as a fast backend.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from bicwave.core.errors import (
    EvaluationDomainError,
    SolverError,
    StateError,
    ValidationError,
)
from bicwave.models.geometry import BoundaryMesh, CircleShape
from bicwave.models.medium import Medium
from bicwave.models.multipole import MultipoleVector
from bicwave.models.scattering import ScatteringMatrix
from bicwave.services import bem
from bicwave.services.cylwave import (
    bessel_j,
    bessel_j_prime,
    cylindrical_waves,
    hankel1,
    hankel1_prime,
    polar,
)
from bicwave.services.mesh import discretize_circle

logger = logging.getLogger(__name__)


def truncation_order(k: float, d: float) -> int:
    """Rokhlin's rule ceil(kd + 8 ln(kd + pi))."""
    if not (k > 0 and d > 0):
        raise ValidationError(f"truncation_order needs k > 0 and d > 0, got k={k}, d={d}")
    kd = k * d
    return int(math.ceil(kd + 8.0 * math.log(kd + math.pi)))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def build_scattering_matrix(mesh: BoundaryMesh, exterior: Medium, interior: Medium,
                            omega: complex, x0, n_tr: int, eta: Optional[complex] = None,
                            quadrature: bem.QuadratureSettings = bem.DEFAULT_QUADRATURE
                            ) -> ScatteringMatrix:
    """
    BEM scattering matrix about x0, keeping the per-order densities.

    Args:
        mesh: scatterer boundary
        exterior, interior: media
        omega: angular frequency (complex allowed)
        x0: expansion center
        n_tr: truncation order
        eta: Burton-Miller coupling (default -i/Re k)

    Returns:
        ScatteringMatrix with ``densities`` holding one column per order n'
    """
    x0 = np.asarray(x0, dtype=float)
    solver = bem.TransmissionSolver(mesh, exterior, interior, omega, eta, quadrature)
    k = solver.k
    orders = np.arange(-n_tr, n_tr + 1)

    values, grad = cylindrical_waves(orders, k, mesh.midpoints - x0, "regular", gradient=True)
    dudn = np.einsum("mdp,md->mp", grad, mesh.normals)
    densities = solver.solve(values, dudn)

    # <I_{-n}, u> with the midpoint rule; I_{-n} is the column-reversed table
    h = mesh.lengths[:, None]
    reg_neg = values[:, ::-1] * h
    dreg_neg = dudn[:, ::-1] * h
    bilinear = dreg_neg.T @ densities.u - exterior.rho * (reg_neg.T @ densities.q)
    prefactor = 0.25j * (-1.0) ** np.abs(orders)
    entries = prefactor[:, None] * bilinear

    radius = mesh.enclosing_radius(x0)
    logger.info(
        f"Built BEM scattering matrix: N={mesh.n_elements}, n_tr={n_tr}, "
        f"omega={complex(omega):.6g}, enclosing radius {radius:.4g}"
    )
    return ScatteringMatrix(entries, x0, radius, omega, exterior, interior,
                            shape=mesh, densities=densities)


def mie_scattering_matrix(radius: float, exterior: Medium, interior: Medium, omega: complex,
                          n_tr: int, center=(0.0, 0.0)) -> ScatteringMatrix:
    """
    Partial-wave scattering matrix of a penetrable circular cylinder.

    Per order n: u_ext = J_n(kr) + b_n H_n(kr), u_int = c_n J_n(k_hat r),
    with u and (1/rho) du/dr continuous at r = radius.

    Raises:
        ValidationError: radius <= 0
        SolverError: a 2x2 matching system is singular (complex-omega pole)
    """
    if not radius > 0:
        raise ValidationError(f"Circle radius must be positive, got {radius}")
    omega = complex(omega)
    k, k_hat = exterior.wavenumber(omega), interior.wavenumber(omega)
    orders = np.arange(-n_tr, n_tr + 1)
    z, z_hat = k * radius, k_hat * radius

    jn, jnp = bessel_j(orders, z), bessel_j_prime(orders, z)
    hn, hnp = hankel1(orders, z), hankel1_prime(orders, z)
    jhn, jhnp = bessel_j(orders, z_hat), bessel_j_prime(orders, z_hat)

    a_out = k / exterior.rho
    a_in = k_hat / interior.rho
    det = jhn * a_out * hnp - hn * a_in * jhnp
    scale = np.abs(jhn * a_out * hnp) + np.abs(hn * a_in * jhnp)
    singular = np.abs(det) <= 1e-14 * scale
    if np.any(singular):
        raise SolverError(
            f"Partial-wave system singular for orders {orders[singular].tolist()}",
            {"omega": [omega.real, omega.imag]},
        )

    b = (a_in * jn * jhnp - a_out * jhn * jnp) / det
    c = a_out * (jn * hnp - hn * jnp) / det

    return ScatteringMatrix(
        np.diag(b), np.asarray(center, float), float(radius), omega, exterior, interior,
        shape=CircleShape(float(radius), tuple(center)), interior_amplitudes=c,
    )


# ---------------------------------------------------------------------------
# Field evaluation
# ---------------------------------------------------------------------------


def order_fields(smat: ScatteringMatrix, points):
    """
    Total fields u_{n'} and gradients for every incident order I_{n'}.

    Outside the enclosing disk the multipole series is used; inside it the
    stored densities (BEM) or interior partial waves (analytic circle).

    Returns:
        values (M, P), grad (M, 2, P) with P = 2 n_tr + 1
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    rel = pts - smat.center
    r, _ = polar(rel)
    orders = smat.orders
    p = orders.size
    values = np.empty((len(pts), p), dtype=complex)
    grad = np.empty((len(pts), 2, p), dtype=complex)

    outer = np.flatnonzero(r > smat.enclosing_radius)
    if outer.size:
        reg, greg = cylindrical_waves(orders, smat.k, rel[outer], "regular", gradient=True)
        out, gout = cylindrical_waves(orders, smat.k, rel[outer], "outgoing", gradient=True)
        values[outer] = reg + out @ smat.entries
        grad[outer] = greg + gout @ smat.entries

    inner = np.flatnonzero(r <= smat.enclosing_radius)
    if inner.size == 0:
        return values, grad

    if smat.interior_amplitudes is not None:
        inside = inner[r[inner] < smat.enclosing_radius]
        on_rim = inner[r[inner] >= smat.enclosing_radius]
        if inside.size:
            wav, gwav = cylindrical_waves(orders, smat.k_interior, rel[inside], "regular", gradient=True)
            values[inside] = wav * smat.interior_amplitudes
            grad[inside] = gwav * smat.interior_amplitudes
        if on_rim.size:
            reg, greg = cylindrical_waves(orders, smat.k, rel[on_rim], "regular", gradient=True)
            out, gout = cylindrical_waves(orders, smat.k, rel[on_rim], "outgoing", gradient=True)
            values[on_rim] = reg + out @ smat.entries
            grad[on_rim] = greg + gout @ smat.entries
        return values, grad

    if smat.densities is None or not isinstance(smat.shape, BoundaryMesh):
        raise StateError("Scattering matrix carries no stored boundary solutions")

    def incident(q):
        return cylindrical_waves(orders, smat.k, q - smat.center, "regular", gradient=True)

    u, g = bem.represent_field(smat.densities, smat.shape, pts[inner], incident)
    values[inner] = u
    grad[inner] = g
    return values, grad


def scattered_field(smat: ScatteringMatrix, A: MultipoleVector, x, gradient: bool = False):
    """
    Total field u_in + scattered response to the incident coefficients A.

    Args:
        smat: scattering matrix
        A: regular-wave coefficients about the same center
        x: point (2,) or points (M, 2)
        gradient: also return the gradient

    Raises:
        ValidationError: A has a different truncation or center
        NearSingularError: point on the boundary (BEM branch)
    """
    if A.n_tr != smat.n_tr:
        raise ValidationError(f"Incident n_tr={A.n_tr} does not match matrix n_tr={smat.n_tr}")
    if not np.allclose(A.center, smat.center):
        raise ValidationError("Incident coefficients must be expanded about the scatterer center")
    pts = np.asarray(x, dtype=float)
    values, grad = order_fields(smat, pts)
    u = values @ A.coeffs
    g = grad @ A.coeffs
    if pts.ndim == 1:
        u, g = u[0], g[0]
    return (u, g) if gradient else u


def outgoing_coefficients(smat: ScatteringMatrix, A: MultipoleVector) -> MultipoleVector:
    """B = S A."""
    return MultipoleVector(smat.entries @ A.coeffs, smat.center, smat.k)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def unitarity_defect(smat: ScatteringMatrix) -> float:
    """max |(I + 2S)^H (I + 2S) - I|; zero for lossless media at real omega."""
    u = np.eye(smat.entries.shape[0]) + 2.0 * smat.entries
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def reciprocity_defect(smat: ScatteringMatrix) -> float:
    """max |S_{n,n'} - S_{-n',-n}|."""
    s = smat.entries
    return float(np.max(np.abs(s - s[::-1, ::-1].T)))


def convergence_study(radius: float, exterior: Medium, interior: Medium, omega: float,
                      n_tr: int, element_counts: Sequence[int]) -> List[Dict[str, float]]:
    """
    BEM-vs-partial-wave error of the circle scattering matrix for several N.

    Returns one row per N with the max entrywise error and the B_0 change
    relative to the previous N.
    """
    reference = mie_scattering_matrix(radius, exterior, interior, omega, n_tr)
    rows: List[Dict[str, float]] = []
    previous = None
    for n in element_counts:
        mesh = discretize_circle((0.0, 0.0), radius, n)
        smat = build_scattering_matrix(mesh, exterior, interior, omega, (0.0, 0.0), n_tr)
        b0 = smat.entries[n_tr, n_tr]
        rows.append({
            "N": n,
            "max_error": float(np.max(np.abs(smat.entries - reference.entries))),
            "b0_change": float(abs(b0 - previous)) if previous is not None else float("nan"),
        })
        previous = b0
        logger.info(f"N={n}: max |S - S_mie| = {rows[-1]['max_error']:.3e}")
    return rows


def require_fields(smat: ScatteringMatrix) -> None:
    if not smat.has_fields:
        raise EvaluationDomainError("Scattering matrix has no stored fields for near-field evaluation")
