"""
Finite arrays of scatterers: multiple-scattering solve, fields, energy
flux and transmittance spectra.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from bicwave.core.errors import BicwaveError, EvaluationDomainError, SolverError
from bicwave.models.geometry import BoundaryMesh, CircleShape
from bicwave.models.medium import Medium
from bicwave.models.modes import ArrayConfig
from bicwave.models.multipole import MultipoleVector
from bicwave.services import smat
from bicwave.services.cylwave import cylindrical_waves, translation_matrix
from bicwave.services.incident import PlaneWave

logger = logging.getLogger(__name__)

Segment = Tuple[Sequence[float], Sequence[float]]


@dataclass
class ArraySolution:
    """
    Outgoing coefficients B^(i) per scatterer, plus the total regular
    coefficients (incident + other scatterers) each one sees.
    """

    outgoing: List[MultipoleVector]
    local_incident: List[np.ndarray]
    omega: complex
    k: complex

    def __iter__(self):
        return iter(self.outgoing)

    def __len__(self) -> int:
        return len(self.outgoing)

    def __getitem__(self, index: int) -> MultipoleVector:
        return self.outgoing[index]


def _translations(arr: ArrayConfig, k: complex) -> Dict[Tuple[int, int], np.ndarray]:
    """T^(ij): outgoing at j to regular at i."""
    n_tr = arr.n_tr
    blocks = {}
    for i, mi in enumerate(arr.members):
        for j, mj in enumerate(arr.members):
            if i != j:
                blocks[i, j] = translation_matrix(k, mi.center - mj.center, n_tr).entries
    return blocks


def finite_array_solve(arr: ArrayConfig, omega: complex,
                       exterior: Optional[Medium] = None) -> ArraySolution:
    """
    Solve B^(i) - S_i sum_{j != i} T^(ij) B^(j) = S_i alpha^(i).

    Raises:
        SolverError: the block system is singular
    """
    omega = complex(omega)
    if exterior is None:
        exterior = arr.members[0].smat.exterior if arr.members else Medium()
    k = exterior.wavenumber(omega)
    if not arr.members:
        return ArraySolution([], [], omega, k)

    n_tr = arr.n_tr
    p = 2 * n_tr + 1
    count = len(arr.members)
    alpha = [
        arr.incident.coefficients(m.center, k, n_tr).coeffs if arr.incident is not None
        else np.zeros(p, dtype=complex)
        for m in arr.members
    ]
    blocks = _translations(arr, k)

    system = np.eye(count * p, dtype=complex)
    rhs = np.empty(count * p, dtype=complex)
    for i, member in enumerate(arr.members):
        rows = slice(i * p, (i + 1) * p)
        rhs[rows] = member.smat.entries @ alpha[i]
        for j in range(count):
            if i != j:
                system[rows, j * p:(j + 1) * p] = -member.smat.entries @ blocks[i, j]

    try:
        solution = linalg.solve(system, rhs)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"Multiple-scattering system is singular: {exc}") from exc

    outgoing, local = [], []
    for i, member in enumerate(arr.members):
        b = solution[i * p:(i + 1) * p]
        outgoing.append(MultipoleVector(b, member.center, k))
        seen = alpha[i] + sum(blocks[i, j] @ solution[j * p:(j + 1) * p]
                              for j in range(count) if j != i)
        local.append(np.asarray(seen))
    logger.info(f"Solved {count}-scatterer array at omega={omega:.6g}")
    return ArraySolution(outgoing, local, omega, k)


def array_field(arr: ArrayConfig, solution: ArraySolution, x):
    """
    Total field and gradient u_in + sum_i sum_n B^(i)_n O_n(x - x_i).

    Points inside an enclosing disk use that scatterer's stored fields.

    Returns:
        (u, grad) with shapes (M,), (M, 2), or scalars for one point

    Raises:
        EvaluationDomainError: x inside a disk whose matrix has no fields
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    k = solution.k

    u = np.zeros(len(pts), dtype=complex)
    grad = np.zeros((len(pts), 2), dtype=complex)
    handled = np.zeros(len(pts), dtype=bool)

    for member, b, seen in zip(arr.members, solution.outgoing, solution.local_incident):
        rel = pts - member.center
        inside = np.hypot(rel[:, 0], rel[:, 1]) <= member.radius
        if np.any(inside):
            if not member.smat.has_fields:
                raise EvaluationDomainError(
                    "Point inside an enclosing disk of a scatterer without stored fields"
                )
            values, grads = smat.order_fields(member.smat, member.local(pts[inside]))
            u[inside] = values @ seen
            grad[inside] = grads @ seen
            handled |= inside

    outside = ~handled
    if np.any(outside):
        if arr.incident is not None:
            ui, gi = arr.incident.field(pts[outside], k)
            u[outside] += ui
            grad[outside] += gi
        for member, b in zip(arr.members, solution.outgoing):
            rel = pts[outside] - member.center
            values, grads = cylindrical_waves(b.orders, k, rel, "outgoing", gradient=True)
            u[outside] += values @ b.coeffs
            grad[outside] += grads @ b.coeffs

    if single:
        return u[0], grad[0]
    return u, grad


# ---------------------------------------------------------------------------
# Energy flux
# ---------------------------------------------------------------------------


FieldFunction = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


def flux_of_field(field_fn: FieldFunction, segment: Segment, quad_n: int, omega: float,
                  rho: float) -> float:
    """
    Time-averaged power (1/(2 omega rho)) int Im[conj(u) du/dnu] through a
    segment, with nu = (t2, -t1) for the unit tangent t from start to end.
    """
    a, b = np.asarray(segment[0], float), np.asarray(segment[1], float)
    length = float(np.linalg.norm(b - a))
    if length == 0:
        return 0.0
    t = (b - a) / length
    nu = np.array([t[1], -t[0]])
    nodes, weights = leggauss(quad_n)
    pts = a[None, :] + 0.5 * (nodes[:, None] + 1.0) * (b - a)[None, :]
    u, grad = field_fn(pts)
    integrand = np.imag(np.conj(u) * (grad @ nu))
    return float(0.5 * length * (weights @ integrand) / (2.0 * omega * rho))


def flux_through_segment(arr: ArrayConfig, solution: ArraySolution, segment: Segment,
                         quad_n: int, omega: float, rho: float) -> float:
    return flux_of_field(lambda p: array_field(arr, solution, p), segment, quad_n, omega, rho)


def flux_through_circle(arr: ArrayConfig, solution: ArraySolution, center, radius: float,
                        quad_n: int, omega: float, rho: float) -> float:
    """Net outward power through a circle (trapezoid rule, spectrally accurate)."""
    theta = 2.0 * np.pi * np.arange(quad_n) / quad_n
    normal = np.column_stack([np.cos(theta), np.sin(theta)])
    pts = np.asarray(center, float)[None, :] + radius * normal
    u, grad = array_field(arr, solution, pts)
    integrand = np.imag(np.conj(u) * np.einsum("md,md->m", grad, normal))
    return float(2.0 * np.pi * radius / quad_n * integrand.sum() / (2.0 * omega * rho))


# ---------------------------------------------------------------------------
# Transmittance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArrayTemplate:
    """
    Identical scatterers (one unit shape) at the given centers.

    ``shape`` is a BoundaryMesh about ``x0`` (BEM) or a CircleShape centered
    at ``x0`` (partial waves); it is translated to every center.
    """

    shape: object
    exterior: Medium
    interior: Medium
    centers: Tuple[Tuple[float, float], ...]
    n_tr: int
    incident: object = field(default_factory=PlaneWave)
    x0: Tuple[float, float] = (0.0, 0.0)

    def scattering_matrix(self, omega: float):
        if isinstance(self.shape, CircleShape):
            return smat.mie_scattering_matrix(self.shape.radius, self.exterior, self.interior,
                                              omega, self.n_tr, center=self.x0)
        if isinstance(self.shape, BoundaryMesh):
            return smat.build_scattering_matrix(self.shape, self.exterior, self.interior,
                                                omega, self.x0, self.n_tr)
        raise EvaluationDomainError(f"Unsupported template shape {type(self.shape).__name__}")

    def build(self, omega: float) -> ArrayConfig:
        if not self.centers:
            return ArrayConfig((), self.incident)
        return ArrayConfig.from_template(self.scattering_matrix(omega), self.centers, self.incident)


@dataclass
class SpectrumResult:
    rows: List[Tuple[float, float]] = field(default_factory=list)
    failures: List[Dict] = field(default_factory=list)


def transmittance_spectrum(template: ArrayTemplate, omega_grid: Sequence[float],
                           gamma_in: Segment, gamma_out: Segment,
                           quad_n: int = 32) -> SpectrumResult:
    """
    E_out / E_in over the frequency grid, with E the power through each line.

    Frequencies whose solve fails are recorded in ``failures``.
    """
    result = SpectrumResult()
    rho = template.exterior.rho
    for omega in omega_grid:
        try:
            arr = template.build(omega)
            solution = finite_array_solve(arr, omega, template.exterior)
            e_in = flux_through_segment(arr, solution, gamma_in, quad_n, omega, rho)
            e_out = flux_through_segment(arr, solution, gamma_out, quad_n, omega, rho)
        except BicwaveError as exc:
            logger.warning(f"Spectrum failed at omega={omega}: {exc.message}")
            result.failures.append({"omega": float(omega), **exc.to_dict()["error"]})
            continue
        if e_in == 0:
            result.failures.append({"omega": float(omega), "code": "ZERO_FLUX",
                                    "message": "No incident power through the input line"})
            continue
        result.rows.append((float(omega), e_out / e_in))
    return result
