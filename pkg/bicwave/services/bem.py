"""
Burton-Miller boundary element solver for the penetrable scatterer.

Constant straight elements with midpoint collocation. Unknowns are the
pressure trace u and the normalized flux trace q = (1/rho) du/dn on the
exterior side. The 2N x 2N system is

    [ 1/2 - D - eta N      rho (S + eta (1/2 + D*)) ] [u]   [u_in + eta du_in/dn]
    [ 1/2 + D_hat          -rho_hat S_hat           ] [q] = [0                  ]

with G = (i/4) H1_0(k|x - y|) and normals pointing into the exterior.
"""

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg

from bicwave.core.config import Config, settings
from bicwave.core.errors import AssemblyError, NearSingularError, SolverError, ValidationError
from bicwave.models.geometry import BoundaryMesh
from bicwave.models.medium import Medium
from bicwave.models.scattering import BoundaryDensities
from bicwave.services.cylwave import hankel1

logger = logging.getLogger(__name__)

IncidentField = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSettings:
    far_points: int = 4
    near_points: int = 32
    near_factor: float = 2.0
    self_points: int = 16
    residual_tol: float = 1e-10
    rcond_min: float = 1e-14
    row_chunk: int = 128

    @classmethod
    def from_config(cls, config: Config = settings) -> "QuadratureSettings":
        return cls(
            far_points=config.BEM_FAR_POINTS,
            near_points=config.BEM_NEAR_POINTS,
            near_factor=config.BEM_NEAR_FACTOR,
            self_points=config.BEM_SELF_POINTS,
            residual_tol=config.BEM_RESIDUAL_TOL,
            rcond_min=config.BEM_RCOND_MIN,
            row_chunk=config.BEM_ROW_CHUNK,
        )

    def to_dict(self) -> dict:
        return dict(self.__dict__)


DEFAULT_QUADRATURE = QuadratureSettings.from_config()


def default_eta(k: complex) -> complex:
    """eta = -i / Re k, with Re k clamped away from zero so Im eta < 0."""
    return -1j / max(abs(complex(k).real), 1e-3)


class LayerOperators(NamedTuple):
    S: np.ndarray
    D: np.ndarray
    Dt: Optional[np.ndarray]
    N: Optional[np.ndarray]


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


def _kernels(diff, nx, ny, k: complex, hypersingular: bool):
    """
    Layer kernels for diff = x - y.

    Returns G, dG/dn_y and, when ``nx`` is given, dG/dn_x and the mixed
    second derivative (only if ``hypersingular``).
    """
    r = np.sqrt(_dot(diff, diff))
    rhat = diff / r[..., None]
    z = k * r
    h0 = hankel1(0, z)
    h1 = hankel1(1, z)
    rn_y = _dot(rhat, ny)

    g = 0.25j * h0
    dg_dny = 0.25j * k * h1 * rn_y
    if nx is None:
        return g, dg_dny, None, None

    rn_x = _dot(rhat, nx)
    dg_dnx = -0.25j * k * h1 * rn_x
    if not hypersingular:
        return g, dg_dny, dg_dnx, None

    h2 = 2.0 * h1 / z - h0
    d2g = 0.25j * k * (-k * h2 * rn_x * rn_y + h1 / r * _dot(nx, ny))
    return g, dg_dny, dg_dnx, d2g


def _element_nodes(mesh: BoundaryMesh, points: int, elements=None):
    """Gauss nodes (E, Q, 2) and weights (E, Q) on the selected elements."""
    g, w = np.polynomial.legendre.leggauss(points)
    sel = slice(None) if elements is None else elements
    half = 0.5 * mesh.lengths[sel]
    nodes = mesh.midpoints[sel][:, None, :] + (half[:, None] * g[None, :])[..., None] * mesh.tangents[sel][:, None, :]
    return nodes, half[:, None] * w[None, :]


# ---------------------------------------------------------------------------
# Self-element integrals
# ---------------------------------------------------------------------------


def self_single_layer(half_length, k: complex, points: int = 16) -> np.ndarray:
    """
    (i/4) int_{-a}^{a} H1_0(k|s|) ds on a flat element of half length a.

    The log singularity (2i/pi) ln s is integrated exactly; the bounded
    remainder goes to Gauss-Legendre on [0, a].
    """
    a = np.atleast_1d(np.asarray(half_length, dtype=float))
    g, w = np.polynomial.legendre.leggauss(points)
    s = 0.5 * a[:, None] * (g[None, :] + 1.0)
    ws = 0.5 * a[:, None] * w[None, :]
    regular = hankel1(0, k * s) - (2j / np.pi) * np.log(s)
    smooth = 2.0 * np.sum(regular * ws, axis=1)
    log_part = (2j / np.pi) * 2.0 * a * (np.log(a) - 1.0)
    return 0.25j * (smooth + log_part)


def self_hypersingular(half_length, k: complex, points: int = 16) -> np.ndarray:
    """
    Finite part of int_{-a}^{a} d2G/dn_x dn_y ds on a flat element.

    On the element the kernel is (ik/4) H1_1(k|s|)/|s|, which behaves like
    1/(2 pi s^2) - (k^2 / 4 pi) ln s near s = 0. Both parts are integrated
    in closed form (p.f. int_0^a s^-2 ds = -1/a).
    """
    a = np.atleast_1d(np.asarray(half_length, dtype=float))
    g, w = np.polynomial.legendre.leggauss(points)
    s = 0.5 * a[:, None] * (g[None, :] + 1.0)
    ws = 0.5 * a[:, None] * w[None, :]
    kernel = 0.25j * k * hankel1(1, k * s) / s
    regular = kernel - 1.0 / (2.0 * np.pi * s**2) + (k**2 / (4.0 * np.pi)) * np.log(s)
    smooth = np.sum(regular * ws, axis=1)
    finite = -1.0 / (2.0 * np.pi * a) - (k**2 / (4.0 * np.pi)) * a * (np.log(a) - 1.0)
    return 2.0 * (smooth + finite)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def layer_operators(mesh: BoundaryMesh, k: complex, hypersingular: bool = True,
                    quadrature: QuadratureSettings = DEFAULT_QUADRATURE) -> LayerOperators:
    """
    Collocation matrices of S, D, D* and N at the element midpoints.

    Args:
        mesh: boundary mesh
        k: wavenumber of the medium on the side being represented
        hypersingular: also build D* and N (exterior side only)
        quadrature: quadrature settings

    Returns:
        LayerOperators (Dt and N are None when not requested)
    """
    k = complex(k)
    n = mesh.n_elements
    mid, normals, lengths = mesh.midpoints, mesh.normals, mesh.lengths
    nodes, weights = _element_nodes(mesh, quadrature.far_points)

    S = np.empty((n, n), dtype=complex)
    D = np.empty((n, n), dtype=complex)
    Dt = np.empty((n, n), dtype=complex) if hypersingular else None
    N = np.empty((n, n), dtype=complex) if hypersingular else None
    near_rows, near_cols = [], []

    for lo in range(0, n, quadrature.row_chunk):
        rows = np.arange(lo, min(lo + quadrature.row_chunk, n))
        diff = mid[rows, None, None, :] - nodes[None, :, :, :]
        # Self pairs get a dummy offset; their entries are replaced below
        diff[np.arange(len(rows)), rows] += lengths[rows, None, None]
        nx = normals[rows, None, None, :]
        ny = normals[None, :, None, :]
        g, dg_dny, dg_dnx, d2g = _kernels(diff, nx if hypersingular else None, ny, k, hypersingular)
        S[rows] = np.sum(g * weights[None], axis=-1)
        D[rows] = np.sum(dg_dny * weights[None], axis=-1)
        if hypersingular:
            Dt[rows] = np.sum(dg_dnx * weights[None], axis=-1)
            N[rows] = np.sum(d2g * weights[None], axis=-1)

        dist = np.linalg.norm(mid[rows, None, :] - mid[None, :, :], axis=-1)
        close = dist < quadrature.near_factor * lengths[None, :]
        close[np.arange(len(rows)), rows] = False
        r_idx, c_idx = np.nonzero(close)
        near_rows.append(rows[r_idx])
        near_cols.append(c_idx)

    # Near-singular pairs with the fine rule
    near_rows = np.concatenate(near_rows)
    near_cols = np.concatenate(near_cols)
    if near_rows.size:
        fine_nodes, fine_weights = _element_nodes(mesh, quadrature.near_points, near_cols)
        diff = mid[near_rows, None, :] - fine_nodes
        nx = normals[near_rows, None, :] if hypersingular else None
        ny = normals[near_cols, None, :]
        g, dg_dny, dg_dnx, d2g = _kernels(diff, nx, ny, k, hypersingular)
        S[near_rows, near_cols] = np.sum(g * fine_weights, axis=-1)
        D[near_rows, near_cols] = np.sum(dg_dny * fine_weights, axis=-1)
        if hypersingular:
            Dt[near_rows, near_cols] = np.sum(dg_dnx * fine_weights, axis=-1)
            N[near_rows, near_cols] = np.sum(d2g * fine_weights, axis=-1)

    # Self elements: D and D* vanish on flat elements
    diag = np.arange(n)
    S[diag, diag] = self_single_layer(0.5 * lengths, k, quadrature.self_points)
    D[diag, diag] = 0.0
    if hypersingular:
        Dt[diag, diag] = 0.0
        N[diag, diag] = self_hypersingular(0.5 * lengths, k, quadrature.self_points)

    logger.debug(f"Layer operators for N={n}, k={k:.6g}: {near_rows.size} near pairs")
    return LayerOperators(S, D, Dt, N)


def assemble_bm(mesh: BoundaryMesh, exterior: Medium, interior: Medium, omega: complex,
                eta: Optional[complex] = None,
                quadrature: QuadratureSettings = DEFAULT_QUADRATURE) -> np.ndarray:
    """
    Dense 2N x 2N Burton-Miller transmission matrix acting on (u, q).

    Raises:
        ValidationError: N < 8 or omega == 0
        AssemblyError: degenerate elements or non-finite entries
    """
    omega = complex(omega)
    n = mesh.n_elements
    if n < 8:
        raise ValidationError(f"BEM needs at least 8 elements, got {n}")
    if omega == 0:
        raise ValidationError("omega must be nonzero")
    if np.any(mesh.lengths <= 0):
        raise AssemblyError("Mesh contains degenerate elements")

    k = exterior.wavenumber(omega)
    k_hat = interior.wavenumber(omega)
    eta = default_eta(k) if eta is None else complex(eta)

    ext = layer_operators(mesh, k, hypersingular=True, quadrature=quadrature)
    inn = layer_operators(mesh, k_hat, hypersingular=False, quadrature=quadrature)

    half = 0.5 * np.eye(n)
    matrix = np.empty((2 * n, 2 * n), dtype=complex)
    matrix[:n, :n] = half - ext.D - eta * ext.N
    matrix[:n, n:] = exterior.rho * (ext.S + eta * (half + ext.Dt))
    matrix[n:, :n] = half + inn.D
    matrix[n:, n:] = -interior.rho * inn.S

    if not np.all(np.isfinite(matrix)):
        raise AssemblyError("Non-finite entries in the assembled BEM matrix")

    logger.info(f"Assembled {2 * n}x{2 * n} Burton-Miller system (omega={omega:.6g})")
    return matrix


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


class TransmissionSolver:
    """Factorized transmission system; solves any number of incident fields."""

    def __init__(self, mesh: BoundaryMesh, exterior: Medium, interior: Medium, omega: complex,
                 eta: Optional[complex] = None,
                 quadrature: QuadratureSettings = DEFAULT_QUADRATURE):
        self.mesh = mesh
        self.exterior = exterior
        self.interior = interior
        self.omega = complex(omega)
        self.k = exterior.wavenumber(omega)
        self.eta = default_eta(self.k) if eta is None else complex(eta)
        self.quadrature = quadrature
        self.matrix = assemble_bm(mesh, exterior, interior, omega, self.eta, quadrature)

        self._lu = linalg.lu_factor(self.matrix, check_finite=False)
        self.rcond = self._estimate_rcond()
        if not self.rcond > quadrature.rcond_min:
            raise SolverError(
                f"BEM system is singular to working precision (rcond={self.rcond:.3e})",
                {"condition": float(1.0 / self.rcond) if self.rcond > 0 else float("inf")},
            )
        logger.debug(f"BEM condition estimate {1.0 / self.rcond:.3e}")

    def _estimate_rcond(self) -> float:
        gecon, = linalg.get_lapack_funcs(("gecon",), (self._lu[0],))
        anorm = np.linalg.norm(self.matrix, 1)
        rcond, info = gecon(self._lu[0], anorm, norm="1")
        return float(rcond) if info == 0 else 0.0

    def solve(self, u_in: np.ndarray, dudn_in: np.ndarray) -> BoundaryDensities:
        """
        Solve for one (shape (N,)) or several (shape (N, P)) incident traces.

        Raises:
            SolverError: if the relative residual exceeds the tolerance
        """
        u_in = np.asarray(u_in, dtype=complex)
        dudn_in = np.asarray(dudn_in, dtype=complex)
        n = self.mesh.n_elements
        if u_in.shape[0] != n or u_in.shape != dudn_in.shape:
            raise ValidationError(
                f"Incident traces must have {n} rows, got {u_in.shape} and {dudn_in.shape}"
            )

        rhs = np.zeros((2 * n,) + u_in.shape[1:], dtype=complex)
        rhs[:n] = u_in + self.eta * dudn_in
        solution = linalg.lu_solve(self._lu, rhs, check_finite=False)

        rhs_norm = np.linalg.norm(rhs)
        if rhs_norm > 0:
            residual = np.linalg.norm(self.matrix @ solution - rhs) / rhs_norm
            if residual > self.quadrature.residual_tol:
                raise SolverError(
                    f"BEM solve residual {residual:.3e} above tolerance",
                    {"residual": float(residual), "condition": float(1.0 / self.rcond)},
                )

        return BoundaryDensities(solution[:n], solution[n:], self.omega, self.exterior, self.interior)


def incident_trace(mesh: BoundaryMesh, field: IncidentField) -> Tuple[np.ndarray, np.ndarray]:
    """Values and normal derivatives of an incident field at the collocation nodes."""
    values, grad = field(mesh.midpoints)
    if values.ndim == 1:
        return values, _dot(grad, mesh.normals)
    return values, np.einsum("mdp,md->mp", grad, mesh.normals)


def solve_transmission(mesh: BoundaryMesh, exterior: Medium, interior: Medium, omega: complex,
                       incident: Tuple[np.ndarray, np.ndarray],
                       eta: Optional[complex] = None) -> BoundaryDensities:
    """
    Assemble, factorize and solve for one set of incident traces.

    Args:
        incident: (u_in, du_in/dn) at the collocation nodes
    """
    solver = TransmissionSolver(mesh, exterior, interior, omega, eta)
    return solver.solve(*incident)


# ---------------------------------------------------------------------------
# Field representation
# ---------------------------------------------------------------------------


def _potentials(points: np.ndarray, mesh: BoundaryMesh, k: complex,
                quadrature: QuadratureSettings):
    """
    Single/double layer potential matrices and their gradients at points.

    Returns S (M, N), D (M, N), grad S (M, 2, N), grad D (M, 2, N).
    """
    k = complex(k)
    m, n = len(points), mesh.n_elements
    S = np.empty((m, n), dtype=complex)
    D = np.empty((m, n), dtype=complex)
    gS = np.empty((m, 2, n), dtype=complex)
    gD = np.empty((m, 2, n), dtype=complex)

    def evaluate(diff, ny, weights):
        r = np.sqrt(_dot(diff, diff))
        rhat = diff / r[..., None]
        z = k * r
        h0, h1 = hankel1(0, z), hankel1(1, z)
        h2 = 2.0 * h1 / z - h0
        rn_y = _dot(rhat, ny)
        g = 0.25j * h0
        dg = 0.25j * k * h1 * rn_y
        grad_g = (-0.25j * k * h1)[..., None] * rhat
        grad_dg = 0.25j * k * ((-k * h2 * rn_y)[..., None] * rhat + (h1 / r)[..., None] * ny)
        return (
            np.sum(g * weights, axis=-1),
            np.sum(dg * weights, axis=-1),
            np.sum(grad_g * weights[..., None], axis=-2),
            np.sum(grad_dg * weights[..., None], axis=-2),
        )

    nodes, weights = _element_nodes(mesh, quadrature.far_points)
    for lo in range(0, m, quadrature.row_chunk):
        rows = slice(lo, min(lo + quadrature.row_chunk, m))
        diff = points[rows, None, None, :] - nodes[None]
        s, d, gs, gd = evaluate(diff, mesh.normals[None, :, None, :], weights[None])
        S[rows], D[rows] = s, d
        gS[rows] = np.moveaxis(gs, -1, 1)
        gD[rows] = np.moveaxis(gd, -1, 1)

    dist = np.linalg.norm(points[:, None, :] - mesh.midpoints[None, :, :], axis=-1)
    pi, ej = np.nonzero(dist < quadrature.near_factor * mesh.lengths[None, :])
    if pi.size:
        fine_nodes, fine_weights = _element_nodes(mesh, quadrature.near_points, ej)
        diff = points[pi, None, :] - fine_nodes
        s, d, gs, gd = evaluate(diff, mesh.normals[ej, None, :], fine_weights)
        S[pi, ej], D[pi, ej] = s, d
        gS[pi, :, ej], gD[pi, :, ej] = gs, gd
    return S, D, gS, gD


def represent_field(densities: BoundaryDensities, mesh: BoundaryMesh, x,
                    incident: Optional[IncidentField] = None,
                    quadrature: QuadratureSettings = DEFAULT_QUADRATURE):
    """
    Total field and gradient at points off the boundary.

    Exterior points:  u = u_in - rho S q + D u
    Interior points:  u = rho_hat S_hat q - D_hat u   (interior wavenumber)

    Args:
        densities: solved boundary densities (one or several columns)
        mesh: the mesh the densities live on
        x: one point (2,) or points (M, 2)
        incident: callable returning (u_in, grad u_in) at points, or None

    Returns:
        (u, grad_u) with shapes matching the input point and density layout

    Raises:
        NearSingularError: a point lies within half an element of the boundary
    """
    pts = np.asarray(x, dtype=float)
    scalar_point = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    u_b, q_b = densities.as_matrix()
    p = u_b.shape[1]

    dist = mesh.distance(pts)
    too_close = dist <= 0.5 * mesh.mean_element_length
    if np.any(too_close):
        raise NearSingularError(
            f"{int(too_close.sum())} evaluation point(s) within half an element of the boundary",
            {"min_distance": float(dist.min()), "element_length": mesh.mean_element_length},
        )

    inside = mesh.contains(pts)
    u = np.zeros((len(pts), p), dtype=complex)
    grad = np.zeros((len(pts), 2, p), dtype=complex)

    out_idx = np.flatnonzero(~inside)
    if out_idx.size:
        k = densities.exterior.wavenumber(densities.omega)
        S, D, gS, gD = _potentials(pts[out_idx], mesh, k, quadrature)
        rho = densities.exterior.rho
        u[out_idx] = -rho * S @ q_b + D @ u_b
        grad[out_idx] = -rho * gS @ q_b + gD @ u_b
        if incident is not None:
            ui, gi = incident(pts[out_idx])
            u[out_idx] += ui.reshape(len(out_idx), -1)
            grad[out_idx] += gi.reshape(len(out_idx), 2, -1)

    in_idx = np.flatnonzero(inside)
    if in_idx.size:
        k_hat = densities.interior.wavenumber(densities.omega)
        S, D, gS, gD = _potentials(pts[in_idx], mesh, k_hat, quadrature)
        rho_hat = densities.interior.rho
        u[in_idx] = rho_hat * S @ q_b - D @ u_b
        grad[in_idx] = rho_hat * gS @ q_b - gD @ u_b

    if densities.u.ndim == 1:
        u, grad = u[:, 0], grad[:, :, 0]
    if scalar_point:
        return u[0], grad[0]
    return u, grad
