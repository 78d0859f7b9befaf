"""
Periodic waveguides: the quasi-periodic operator Id - S T^G, resonant
modes in beta or omega, band sweeps, classification and mode profiles.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from bicwave.core.cache import ScatteringCache, scattering_cache
from bicwave.core.config import settings
from bicwave.core.errors import (
    BicwaveError,
    ConfigError,
    DegenerateEigenvalueError,
    TruncationError,
    ValidationError,
)
from bicwave.models.eigen import ContourSpec
from bicwave.models.geometry import CircleShape
from bicwave.models.modes import FieldGrid, ModeKind, ModeResult, PeriodicConfig
from bicwave.models.multipole import MultipoleVector
from bicwave.models.scattering import ScatteringMatrix
from bicwave.services import lattice, nep, smat
from bicwave.services.cylwave import cylindrical_waves

logger = logging.getLogger(__name__)

# Radius around each cell center where the local (regular + outgoing)
# expansion is used, in units of L
_LOCAL_RADIUS = 0.75
_GROWTH_LIMIT = 50.0
_DEDUP_TOL = 1e-6


# ---------------------------------------------------------------------------
# Scattering matrix and operator
# ---------------------------------------------------------------------------


def scattering_matrix_for(cfg: PeriodicConfig, omega: complex,
                          cache: Optional[ScatteringCache] = None) -> ScatteringMatrix:
    """S(omega) of the unit cell, built once per (shape, omega, N, n_tr, media)."""
    cache = cache or scattering_cache
    omega = complex(omega)
    key = cache.make_key(cfg.shape.geometry_hash, omega, cfg.n_elements, cfg.n_tr, cfg.media_key)

    def build() -> ScatteringMatrix:
        if cfg.solver == "analytic":
            shape: CircleShape = cfg.shape
            if not np.allclose(shape.center, cfg.x0):
                raise ValidationError("The analytic circle must be centered at x0")
            return smat.mie_scattering_matrix(shape.radius, cfg.exterior, cfg.interior, omega,
                                              cfg.n_tr, center=cfg.x0)
        return smat.build_scattering_matrix(cfg.shape, cfg.exterior, cfg.interior, omega,
                                            cfg.x0, cfg.n_tr, cfg.eta)

    return cache.get_or_build(key, build)


def lattice_sum_for(cfg: PeriodicConfig, omega: complex, beta: complex):
    """T^G and dT^G/dbeta for the period, split index and sound speed of cfg."""
    return lattice.lattice_sum_integral(omega, beta, cfg.L, cfg.n_tr, cfg.s, cfg.exterior.c)


def periodic_operator(cfg: PeriodicConfig, omega: complex, beta: complex,
                      scattering: Optional[ScatteringMatrix] = None) -> np.ndarray:
    """Id - S(omega) T^G(omega, beta)."""
    scattering = scattering or scattering_matrix_for(cfg, omega)
    tg = lattice_sum_for(cfg, omega, beta).entries
    return np.eye(tg.shape[0]) - scattering.entries @ tg


# ---------------------------------------------------------------------------
# Classification and folding
# ---------------------------------------------------------------------------


def in_continuum(omega: complex, beta: complex, L: float, c: float = 1.0) -> bool:
    """omega^2/c^2 - (beta + 2 n pi)^2 / L^2 > 0 for some integer n (real parts)."""
    b = complex(beta).real
    nearest = abs(math.remainder(b, 2 * math.pi))
    return nearest < abs(complex(omega).real) * L / c


def classify_mode(omega: complex, beta: complex, L: float, c: float = 1.0,
                  tol_im: float = 1e-4) -> ModeKind:
    """guided / leaky / bic_candidate from the imaginary parts and the light cone."""
    omega, beta = complex(omega), complex(beta)
    if abs(beta.imag) > tol_im or abs(omega.imag) > tol_im:
        return ModeKind.LEAKY
    if in_continuum(omega, beta, L, c):
        return ModeKind.BIC_CANDIDATE
    return ModeKind.GUIDED


def fold_beta(beta: complex, time_reversal: bool = True) -> complex:
    """
    Map beta to 0 <= Re beta <= pi using beta + 2 m pi and, at real omega,
    the time-reversal partner -conj(beta).
    """
    beta = complex(beta)
    folded = complex(math.remainder(beta.real, 2 * math.pi), beta.imag)
    if folded.real < 0:
        if time_reversal:
            folded = -folded.conjugate()
        else:
            folded += 2 * math.pi
    return folded


def light_lines(omega_grid: Iterable[float], L: float, c: float = 1.0,
                orders: Iterable[int] = range(-2, 3)) -> List[Dict]:
    """Rows (omega, beta, n, sign) of beta = +-kL + 2 n pi."""
    rows = []
    for omega in omega_grid:
        kl = float(omega) * L / c
        for n in orders:
            for sign in (1, -1):
                rows.append({"omega": float(omega), "beta": sign * kl + 2 * math.pi * n,
                             "n": n, "sign": sign})
    return rows


# ---------------------------------------------------------------------------
# Eigenvalue problems
# ---------------------------------------------------------------------------


def _check_beta_contour(contour: ContourSpec, omega: complex, L: float, c: float,
                        exclusion: float) -> None:
    crossings = lattice.contour_cut_crossings(contour.center, contour.radius, omega, L, c)
    nodes = contour.nodes()
    close = [
        [z.real, z.imag] for z in nodes
        if lattice.branch_cut_distance(z, omega, L, c) < exclusion
    ]
    if crossings or close:
        raise ConfigError(
            f"Contour |beta - {contour.center:.4g}| = {contour.radius:g} meets "
            f"{len(crossings)} branch cut(s)",
            {"crossings": crossings, "nodes": close},
        )


def _check_omega_contour(contour: ContourSpec, beta: complex, L: float, c: float,
                         exclusion: float) -> None:
    # Cuts are screened on a dense sampling of the omega circle
    dense = ContourSpec(contour.center, contour.radius, quad_points=8 * contour.quad_points)
    close = [
        [w.real, w.imag] for w in dense.nodes()
        if lattice.branch_cut_distance(beta, w, L, c) < max(exclusion, 1e-6)
    ]
    if close:
        raise ConfigError(
            f"Omega contour around {contour.center:.4g} passes a lattice branch cut at beta={complex(beta):.4g}",
            {"nodes": close[:10]},
        )


def _modes_from_pairs(cfg: PeriodicConfig, result, operator, omega_of, beta_of, k_of,
                      tol_im: float) -> List[ModeResult]:
    modes = []
    for pair in result:
        try:
            left = nep.left_eigenvector(operator, pair.z)
        except DegenerateEigenvalueError as exc:
            logger.warning(exc.message)
            left = None
        omega, beta = omega_of(pair.z), beta_of(pair.z)
        modes.append(ModeResult(
            omega=omega,
            beta=beta,
            B=MultipoleVector(pair.right_vec, cfg.x0, k_of(pair.z)),
            residual=pair.residual,
            classification=classify_mode(omega, beta, cfg.L, cfg.exterior.c, tol_im),
            B_left=left,
            refinement=pair.refinement,
        ))
    return modes


def eig_beta(cfg: PeriodicConfig, omega: complex, contour: ContourSpec,
             workers: Optional[int] = None,
             tol_im: float = settings.MODE_TOL_IM) -> List[ModeResult]:
    """
    Floquet wavenumbers inside ``contour`` at fixed omega.

    One scattering matrix serves every quadrature node.

    Raises:
        ConfigError: the contour crosses or touches a branch cut
    """
    omega = complex(omega)
    _check_beta_contour(contour, omega, cfg.L, cfg.exterior.c, settings.BRANCH_EXCLUSION)
    scattering = scattering_matrix_for(cfg, omega)

    def operator(beta):
        return periodic_operator(cfg, omega, beta, scattering)

    result = nep.ssm_solve(operator, contour, workers)
    k = cfg.exterior.wavenumber(omega)
    return _modes_from_pairs(cfg, result, operator, lambda z: omega, lambda z: z,
                             lambda z: k, tol_im)


def omega_workers(cfg: PeriodicConfig, workers: Optional[int] = None) -> int:
    """Threads for omega-contour nodes, at most BEM_WORKERS for the BEM solver."""
    requested = workers or settings.WORKERS
    if cfg.solver == "bem":
        return max(1, min(requested, settings.BEM_WORKERS))
    return requested


def eig_omega(cfg: PeriodicConfig, beta: complex, contour: ContourSpec,
              workers: Optional[int] = None,
              tol_im: float = settings.MODE_TOL_IM) -> List[ModeResult]:
    """Complex resonant frequencies inside ``contour`` at fixed beta."""
    beta = complex(beta)
    _check_omega_contour(contour, beta, cfg.L, cfg.exterior.c, settings.BRANCH_EXCLUSION)

    def operator(omega):
        return periodic_operator(cfg, omega, beta)

    result = nep.ssm_solve(operator, contour, omega_workers(cfg, workers))
    return _modes_from_pairs(cfg, result, operator, lambda z: z, lambda z: beta,
                             cfg.exterior.wavenumber, tol_im)


# ---------------------------------------------------------------------------
# Band sweeps
# ---------------------------------------------------------------------------


@dataclass
class BandSweepResult:
    modes: List[ModeResult] = field(default_factory=list)
    failures: List[Dict] = field(default_factory=list)

    def __iter__(self):
        return iter(self.modes)

    def __len__(self) -> int:
        return len(self.modes)


def strip_contours(omega: float, L: float, c: float = 1.0, radius: float = 0.45,
                   margin: float = 0.01, im_max: float = 1.2, spacing: float = 0.6,
                   min_radius: float = 0.05) -> List[ContourSpec]:
    """
    Overlapping circles covering kL < Re beta < kL + 2 pi, 0 <= Im beta <= im_max.

    Each radius is shrunk so the circle stays ``margin`` away from every cut;
    circles that would become smaller than ``min_radius`` are skipped.
    """
    kl = float(omega) * L / c
    contours = []
    rows = np.arange(0.0, im_max + 1e-12, spacing)
    cols = kl + spacing / 2 + spacing * np.arange(int(math.ceil(2 * math.pi / spacing)))
    for im in rows:
        for re in cols:
            if re > kl + 2 * math.pi:
                continue
            center = complex(re, im)
            r = min(radius, lattice.branch_cut_distance(center, omega, L, c) - margin)
            if r < min_radius:
                continue
            if lattice.contour_cut_crossings(center, r, omega, L, c):
                continue
            contours.append(ContourSpec.from_config(center, r))
    return contours


def _merge(modes: List[ModeResult], tol: float = _DEDUP_TOL) -> List[ModeResult]:
    merged: List[ModeResult] = []
    for mode in sorted(modes, key=lambda m: m.residual):
        if all(abs(mode.beta - other.beta) > tol or abs(mode.omega - other.omega) > tol
               for other in merged):
            merged.append(mode)
    return sorted(merged, key=lambda m: (m.omega.real, m.beta.real))


def band_sweep(cfg: PeriodicConfig, omega_grid: Sequence[float],
               contours_for=strip_contours, workers: Optional[int] = None,
               tol_im: float = settings.MODE_TOL_IM) -> BandSweepResult:
    """
    Eigenvalues beta(omega) over the fundamental strip at each grid frequency.

    Eigenvalues are folded to 0 <= Re beta <= pi and merged across
    overlapping contours. A failing frequency is recorded and skipped.
    """
    result = BandSweepResult()
    for omega in omega_grid:
        found: List[ModeResult] = []
        try:
            for contour in contours_for(omega, cfg.L, cfg.exterior.c):
                for mode in eig_beta(cfg, omega, contour, workers, tol_im):
                    beta = fold_beta(mode.beta)
                    found.append(ModeResult(
                        mode.omega, beta, mode.B, mode.residual,
                        classify_mode(mode.omega, beta, cfg.L, cfg.exterior.c, tol_im),
                        mode.B_left, mode.refinement,
                    ))
        except BicwaveError as exc:
            logger.warning(f"Band sweep failed at omega={omega}: {exc.message}")
            result.failures.append({"omega": float(omega), **exc.to_dict()["error"]})
            continue
        merged = _merge(found)
        logger.info(f"omega={omega:.6g}: {len(merged)} mode(s)")
        result.modes.extend(merged)
    return result


# ---------------------------------------------------------------------------
# Mode profiles
# ---------------------------------------------------------------------------


def mode_field(cfg: PeriodicConfig, mode: ModeResult, grid, copies: int = 30) -> np.ndarray:
    """
    Field of a quasi-periodic mode at grid points.

    Near the lattice axis each point is mapped to its nearest cell and the
    exact local expansion (outgoing from that cell plus the lattice-sum
    regular part) is used; inside the central scatterer's disk the stored
    boundary solution is used. Points further away sum ``copies`` cells on
    each side directly.

    Args:
        grid: FieldGrid or an (M, 2) array of points

    Raises:
        TruncationError: |Im beta| * copies * L > 50
    """
    beta = complex(mode.beta)
    if abs(beta.imag) * copies * cfg.L > _GROWTH_LIMIT:
        raise TruncationError(
            f"Growth guard: |Im beta| * copies * L = {abs(beta.imag) * copies * cfg.L:.3g} > {_GROWTH_LIMIT}",
            {"copies": copies, "beta": [beta.real, beta.imag]},
        )
    pts = grid.points() if isinstance(grid, FieldGrid) else np.asarray(grid, float).reshape(-1, 2)
    coeffs = np.asarray(mode.B.coeffs)
    values = np.zeros(len(pts), dtype=complex)
    if not np.any(coeffs):
        return values

    scattering = scattering_matrix_for(cfg, mode.omega)
    k = scattering.k
    orders = scattering.orders
    x0 = np.asarray(cfg.x0)
    regular = lattice_sum_for(cfg, mode.omega, beta).entries @ coeffs

    cell = np.rint((pts[:, 0] - x0[0]) / cfg.L).astype(int)
    local = pts - x0 - np.outer(cell, cfg.lattice_vector)
    dist = np.hypot(local[:, 0], local[:, 1])
    phase = np.exp(1j * beta * cell)

    in_disk = dist <= scattering.enclosing_radius
    near = (dist < _LOCAL_RADIUS * cfg.L) & ~in_disk
    far = ~(in_disk | near)

    if np.any(in_disk):
        u_orders, _ = smat.order_fields(scattering, local[in_disk] + x0)
        values[in_disk] = phase[in_disk] * (u_orders @ regular)
    if np.any(near):
        out = cylindrical_waves(orders, k, local[near], "outgoing")
        reg = cylindrical_waves(orders, k, local[near], "regular")
        values[near] = phase[near] * (out @ coeffs + reg @ regular)
    if np.any(far):
        for i in range(-copies, copies + 1):
            rel = pts[far] - x0 - i * cfg.lattice_vector
            values[far] += np.exp(1j * beta * i) * (cylindrical_waves(orders, k, rel, "outgoing") @ coeffs)
    return values
