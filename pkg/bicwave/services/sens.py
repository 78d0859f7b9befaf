"""
Topological derivatives of the scattering matrix and of the Floquet
wavenumber, and the finite-difference harness that checks them.

The adjoint fields are the stored forward solutions u_{-n}; no extra
solve is needed.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from bicwave.core.errors import (
    DegenerateModeError,
    StateError,
    TrackingError,
    ValidationError,
)
from bicwave.models.eigen import ContourSpec
from bicwave.models.geometry import BoundaryMesh
from bicwave.models.lattice import LatticeSum
from bicwave.models.medium import Medium
from bicwave.models.modes import ModeResult, PeriodicConfig
from bicwave.models.optimization import EXTERIOR, INTERIOR, TopoGradientField
from bicwave.models.scattering import ScatteringMatrix
from bicwave.services import physics, smat
from bicwave.services.mesh import insert_disk

logger = logging.getLogger(__name__)

_RESIDUAL_LIMIT = 1e-6
_DEGENERACY = 1e-12


def contrast_factors(exterior: Medium, interior: Medium, omega: complex, side: str):
    """
    (c1, c2) multiplying grad.grad and u.u in D_T S.

    Exterior points nucleate interior material; interior points nucleate
    exterior material.
    """
    rho, kappa = exterior.rho, exterior.kappa
    rho_h, kappa_h = interior.rho, interior.kappa
    w2 = complex(omega) ** 2
    if side == EXTERIOR:
        return 2.0 * (rho_h - rho) / (rho + rho_h), w2 * rho * (1.0 / kappa_h - 1.0 / kappa)
    if side == INTERIOR:
        return (2.0 * rho * (rho - rho_h) / (rho_h * (rho + rho_h)),
                w2 * rho * (1.0 / kappa - 1.0 / kappa_h))
    raise ValidationError(f"side must be '{EXTERIOR}' or '{INTERIOR}', got '{side}'")


def _resolve_sides(scattering: ScatteringMatrix, points: np.ndarray, sides) -> np.ndarray:
    if scattering.shape is None:
        raise StateError("Scattering matrix has no shape to decide evaluation sides")
    inside = scattering.shape.contains(points)
    actual = np.where(inside, INTERIOR, EXTERIOR)
    if sides is None:
        return actual
    sides = np.broadcast_to(np.asarray(sides), actual.shape)
    if np.any(sides != actual):
        raise ValidationError("Declared side does not match the geometry at some points")
    return np.asarray(sides)


def _fields(scattering: ScatteringMatrix, points: np.ndarray):
    if not scattering.has_fields:
        raise StateError("Scattering matrix carries no stored fields")
    return smat.order_fields(scattering, points)


def dt_scattering_matrix(scattering: ScatteringMatrix, x, side: Optional[str] = None) -> np.ndarray:
    """
    D_T S at x: (i(-1)^n/4)[c1 grad u_{-n}.grad u_{n'} + c2 u_{-n} u_{n'}].

    Raises:
        StateError: no stored fields
        NearSingularError: x too close to the boundary
    """
    pt = np.asarray(x, dtype=float).reshape(1, 2)
    resolved = _resolve_sides(scattering, pt, side)[0]
    c1, c2 = contrast_factors(scattering.exterior, scattering.interior, scattering.omega, resolved)
    values, grad = _fields(scattering, pt)
    u, g = values[0], grad[0]
    u_neg, g_neg = u[::-1], g[:, ::-1]
    prefactor = 0.25j * (-1.0) ** np.abs(scattering.orders)
    body = c1 * (g_neg.T @ g) + c2 * np.outer(u_neg, u)
    return prefactor[:, None] * body


def _check_mode(mode: ModeResult) -> None:
    if mode.B_left is None:
        raise StateError("Mode has no left eigenvector")
    if mode.residual > _RESIDUAL_LIMIT:
        raise StateError(f"Mode residual {mode.residual:.2e} above {_RESIDUAL_LIMIT:g}")


def _denominator(mode: ModeResult, scattering: ScatteringMatrix, latt: LatticeSum) -> complex:
    b = np.asarray(mode.B.coeffs)
    b_left = np.asarray(mode.B_left)
    den = b_left.conj() @ scattering.entries @ latt.d_beta_entries @ b
    scale = np.linalg.norm(scattering.entries) * np.linalg.norm(b) * np.linalg.norm(b_left)
    if abs(den) <= _DEGENERACY * scale:
        raise DegenerateModeError(
            "dT^G/dbeta term vanishes; the dispersion relation is stationary in beta",
            {"denominator": abs(den)},
        )
    return complex(den)


def dt_beta_points(mode: ModeResult, scattering: ScatteringMatrix, latt: LatticeSum,
                   points, sides=None) -> np.ndarray:
    """
    D_T beta at many points, each an O(P) contraction of the stored fields.

    Returns:
        complex array (M,)
    """
    _check_mode(mode)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    resolved = _resolve_sides(scattering, pts, sides)
    den = _denominator(mode, scattering, latt)

    b = np.asarray(mode.B.coeffs)
    regular = latt.entries @ b
    weights = np.conj(mode.B_left) * 0.25j * (-1.0) ** np.abs(scattering.orders)

    values, grad = _fields(scattering, pts)
    left_u = values[:, ::-1] @ weights
    left_g = grad[:, :, ::-1] @ weights
    right_u = values @ regular
    right_g = grad @ regular

    c1 = np.empty(len(pts), dtype=complex)
    c2 = np.empty(len(pts), dtype=complex)
    for side in (EXTERIOR, INTERIOR):
        mask = resolved == side
        c1[mask], c2[mask] = contrast_factors(scattering.exterior, scattering.interior,
                                              scattering.omega, side)

    numerator = c1 * np.einsum("md,md->m", left_g, right_g) + c2 * left_u * right_u
    return -numerator / den


def dt_beta(mode: ModeResult, scattering: ScatteringMatrix, latt: LatticeSum, x,
            side: Optional[str] = None) -> complex:
    """
    D_T beta = -(B~^H D_T S T^G B) / (B~^H S dT^G/dbeta B).

    Raises:
        DegenerateModeError: the denominator vanishes
    """
    return complex(dt_beta_points(mode, scattering, latt, np.asarray(x, float)[None, :],
                                  None if side is None else [side])[0])


def dt_objective(mode: ModeResult, dt_beta_val: complex) -> float:
    """D_T J for J = (Im beta)^2."""
    return 2.0 * complex(mode.beta).imag * complex(dt_beta_val).imag


def topo_gradient_field(cfg: PeriodicConfig, mode: ModeResult, points, sides=None,
                        scattering: Optional[ScatteringMatrix] = None) -> TopoGradientField:
    scattering = scattering or physics.scattering_matrix_for(cfg, mode.omega)
    latt = physics.lattice_sum_for(cfg, mode.omega, mode.beta)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    resolved = _resolve_sides(scattering, pts, sides)
    samples = dt_beta_points(mode, scattering, latt, pts, resolved)
    return TopoGradientField(pts, samples, resolved, mode.omega, mode.beta)


def fd_check(cfg: PeriodicConfig, base_mode: ModeResult, x, eps_list: Sequence[float],
             workers: Optional[int] = None) -> List[Dict]:
    """
    Compare D_T beta at x with (beta(Omega + B_eps(x)) - beta) / (pi eps^2).

    Exterior x gets a disk of interior material, interior x a hole. Each
    perturbed problem is solved on a contour of radius
    5 |pi eps^2 D_T beta| + 1e-3 about the base eigenvalue.

    Raises:
        ValidationError: the configuration has no boundary mesh
        TrackingError: the perturbed eigenvalue left its contour
    """
    if not isinstance(cfg.shape, BoundaryMesh):
        raise ValidationError("fd_check needs a BEM configuration with a boundary mesh")
    mesh: BoundaryMesh = cfg.shape
    point = np.asarray(x, dtype=float)
    scattering = physics.scattering_matrix_for(cfg, base_mode.omega)
    latt = physics.lattice_sum_for(cfg, base_mode.omega, base_mode.beta)
    interior = bool(mesh.contains(point[None, :])[0])
    side = INTERIOR if interior else EXTERIOR
    derivative = dt_beta(base_mode, scattering, latt, point, side)
    h = mesh.mean_element_length

    rows = []
    for eps in eps_list:
        n_eps = max(32, int(math.ceil(2 * math.pi * eps / h)))
        perturbed = cfg.with_shape(insert_disk(mesh, point, eps, n_eps, remove=interior))
        area = math.pi * eps * eps
        radius = 5.0 * abs(area * derivative) + 1e-3
        contour = ContourSpec.from_config(base_mode.beta, radius)
        modes = physics.eig_beta(perturbed, base_mode.omega, contour, workers)
        if not modes:
            raise TrackingError(
                f"Perturbed eigenvalue not found within {radius:.3g} of {base_mode.beta:.6g}",
                {"eps": eps},
            )
        predicted = base_mode.beta + area * derivative
        beta_eps = min(modes, key=lambda m: abs(m.beta - predicted)).beta
        fd = (beta_eps - base_mode.beta) / area
        rows.append({
            "eps": eps,
            "n_elements": n_eps,
            "beta": beta_eps,
            "fd": fd,
            "dt_beta": derivative,
            "rel_err_re": abs(fd.real - derivative.real) / max(abs(derivative.real), 1e-300),
            "rel_err_im": abs(fd.imag - derivative.imag) / max(abs(derivative.imag), 1e-300),
        })
        logger.info(f"eps={eps:g}: FD {fd:.6g} vs D_T beta {derivative:.6g}")
    return rows
