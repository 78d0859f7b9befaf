"""
Level-set topology optimization of J = (Im beta)^2 at fixed omega.

Each iteration meshes the zero contour of phi, tracks the resonant
eigenvalue from the previous design, samples the topological derivative
of J over the design domain and moves phi toward its normalized
generalized gradient:

    phi_{i+1} = (1 - Delta (T, phi)) phi + Delta T,   then ||phi|| = 1.
"""

import logging
from typing import Callable, List, Optional

import numpy as np
from scipy.interpolate import NearestNDInterpolator, RegularGridInterpolator

from bicwave.core.errors import (
    BoundaryClipError,
    EmptyShapeError,
    NumericalError,
    StationaryPoint,
    TrackingError,
    ValidationError,
)
from bicwave.models.eigen import ContourSpec
from bicwave.models.geometry import BoundaryMesh, LevelSetField
from bicwave.models.modes import ModeResult, PeriodicConfig
from bicwave.models.optimization import (
    EXTERIOR,
    INTERIOR,
    HistoryEntry,
    OptOptions,
    OptState,
    TopoGradientField,
)
from bicwave.services import lattice, physics, sens
from bicwave.services.levelset import l2_inner, l2_project, levelset_eval, normalize
from bicwave.services.mesh import extract_contour

logger = logging.getLogger(__name__)

_CORRELATION_MIN = 0.5
_CUT_MARGIN = 0.01
_PROBE_H = 0.005


# ---------------------------------------------------------------------------
# Geometry and eigenvalue continuation
# ---------------------------------------------------------------------------


def mesh_for(phi: LevelSetField, opts: OptOptions, n_elements: Optional[int] = None) -> BoundaryMesh:
    """Zero contour of phi resampled to about ``n_elements`` elements."""
    n_elements = n_elements or opts.n_elements
    probe = extract_contour(phi, opts.cells, _PROBE_H)
    return extract_contour(phi, opts.cells, probe.perimeter / n_elements)


def bem_config(cfg: PeriodicConfig, mesh: BoundaryMesh) -> PeriodicConfig:
    return PeriodicConfig(cfg.L, cfg.exterior, cfg.interior, mesh, cfg.x0, cfg.n_tr,
                          "bem", cfg.s, cfg.eta)


def _correlation(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


def track_eigenvalue(previous: ModeResult, cfg: PeriodicConfig, omega: float,
                     last_step: float = 0.0, radius: Optional[float] = None,
                     workers: Optional[int] = None) -> ModeResult:
    """
    Follow a mode to a modified configuration.

    The contour is centered at the previous beta with radius
    max(0.1, 3 |last step|), shrunk to stay clear of branch cuts. Candidates
    whose right vectors correlate by at least 0.5 with the previous one are
    preferred; otherwise the nearest eigenvalue wins.

    Raises:
        TrackingError: no eigenvalue inside the contour
    """
    beta0 = complex(previous.beta)
    r = radius if radius is not None else max(0.1, 3.0 * abs(last_step))
    clearance = lattice.branch_cut_distance(beta0, omega, cfg.L, cfg.exterior.c) - _CUT_MARGIN
    r = min(r, clearance)
    if r <= 1e-3:
        raise TrackingError(f"beta={beta0:.6g} is too close to a branch cut to track",
                            {"clearance": clearance})

    modes = physics.eig_beta(cfg, omega, ContourSpec.from_config(beta0, r), workers)
    if not modes:
        raise TrackingError(f"No eigenvalue within {r:.3g} of beta={beta0:.6g}")

    prev_vec = np.asarray(previous.B.coeffs)
    correlated = [m for m in modes
                  if _correlation(prev_vec, np.asarray(m.B.coeffs)) >= _CORRELATION_MIN]
    pool = correlated or modes
    return min(pool, key=lambda m: abs(m.beta - beta0))


def seed_mode(cfg: PeriodicConfig, omega: float, beta_seed: complex, radius: float,
              workers: Optional[int] = None) -> ModeResult:
    """Eigenvalue nearest beta_seed on a contour of the given radius."""
    beta_seed = complex(beta_seed)
    clearance = lattice.branch_cut_distance(beta_seed, omega, cfg.L, cfg.exterior.c) - _CUT_MARGIN
    modes = physics.eig_beta(cfg, omega, ContourSpec.from_config(beta_seed, min(radius, clearance)),
                             workers)
    if not modes:
        raise TrackingError(f"No eigenvalue within {radius:g} of the seed {beta_seed:.6g}")
    return min(modes, key=lambda m: abs(m.beta - beta_seed))


# ---------------------------------------------------------------------------
# Descent direction
# ---------------------------------------------------------------------------


def sampling_points(phi: LevelSetField, samples: int):
    xs = np.linspace(phi.x_lo, phi.x_hi, samples)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    return xs, np.column_stack([xx.ravel(), yy.ravel()])


def gradient_samples(cfg: PeriodicConfig, mode: ModeResult, phi: LevelSetField,
                     mesh: BoundaryMesh, samples: int) -> TopoGradientField:
    """
    D_T beta on a samples x samples grid over the design domain.

    Points within one element length of the boundary take the value of the
    nearest valid point on the same side.
    """
    _, pts = sampling_points(phi, samples)
    sides = np.where(levelset_eval(phi, pts) < 0, INTERIOR, EXTERIOR)
    # Contour and mesh can disagree right at the interface
    geometric = np.where(mesh.contains(pts), INTERIOR, EXTERIOR)
    valid = (mesh.distance(pts) >= mesh.mean_element_length) & (sides == geometric)

    values = np.zeros(len(pts), dtype=complex)
    values[valid] = sens.topo_gradient_field(cfg, mode, pts[valid], sides[valid]).samples

    for side in (EXTERIOR, INTERIOR):
        donors = valid & (sides == side)
        targets = ~valid & (sides == side)
        if not np.any(targets):
            continue
        if not np.any(donors):
            donors = valid
        fill = NearestNDInterpolator(pts[donors], values[donors])
        values[targets] = fill(pts[targets])
    return TopoGradientField(pts, values, sides, mode.omega, mode.beta)


def descent_direction(gradient: TopoGradientField, phi: LevelSetField, grid: int) -> LevelSetField:
    """
    Unit-norm T = g / ||g|| with g = D_T J outside the material and
    -D_T J inside, projected onto the spline space.
    """
    xs, _ = sampling_points(phi, int(round(np.sqrt(len(gradient.points)))))
    g = gradient.descent_field().reshape(len(xs), len(xs))
    interpolant = RegularGridInterpolator((xs, xs), g, method="linear", bounds_error=False,
                                          fill_value=None)
    projected = l2_project(interpolant, grid, phi.x_lo, phi.x_hi, phi.degree)
    return normalize(projected)


def update_levelset(phi: LevelSetField, direction: LevelSetField, delta: float) -> LevelSetField:
    """One level-set step followed by renormalization."""
    alignment = l2_inner(direction, phi)
    return normalize(phi * (1.0 - delta * alignment) + direction * delta)


# ---------------------------------------------------------------------------
# Step control
# ---------------------------------------------------------------------------


def step_control(history: List[HistoryEntry], current: OptState, delta: float,
                 opts: Optional[OptOptions] = None) -> float:
    """
    Next step size after evaluating ``current``.

    A step is accepted when current.J is below the last accepted J in
    ``history``. Rejection halves delta down to delta_min; a rejection at
    delta_min raises StationaryPoint. Two accepts in a row grow delta by
    ``opts.grow`` up to delta_max.
    """
    opts = opts or OptOptions()
    accepted_js = [entry.J for entry in history if entry.accepted]
    accepted = not accepted_js or current.J < accepted_js[-1]
    if not accepted:
        if delta <= opts.delta_min:
            raise StationaryPoint(
                f"No decrease of J at the minimum step {opts.delta_min:g}",
                {"J": current.J, "delta": delta},
            )
        return max(0.5 * delta, opts.delta_min)
    if history and history[-1].accepted:
        return min(delta * opts.grow, opts.delta_max)
    return delta


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def initial_levelset(radius: float = 0.3, grid: int = 64, x_lo: float = -0.354,
                     x_hi: float = 0.354) -> LevelSetField:
    """Normalized projection of |x| - radius."""
    return normalize(l2_project(lambda p: np.hypot(p[:, 0], p[:, 1]) - radius, grid, x_lo, x_hi))


def _objective(mode: ModeResult) -> float:
    return complex(mode.beta).imag ** 2


def optimize(init: LevelSetField, cfg: PeriodicConfig, omega: float, beta_seed: complex,
             opts: Optional[OptOptions] = None, workers: Optional[int] = None,
             callback: Optional[Callable[[OptState], None]] = None) -> OptState:
    """
    Minimize (Im beta)^2 over level-set designs.

    Args:
        init: initial level-set field (normalized internally)
        cfg: periodic configuration supplying L, media and n_tr
        omega: fixed real frequency
        beta_seed: starting guess for the tracked eigenvalue
        opts: optimization options
        callback: called with the state after every iteration

    Returns:
        final OptState with the full history; ``status`` is one of
        converged, stationary, max_iter or tracking_lost
    """
    opts = opts or OptOptions.from_config()
    phi = normalize(init)
    mesh = mesh_for(phi, opts)
    mode = seed_mode(bem_config(cfg, mesh), omega, beta_seed, opts.seed_radius, workers)
    state = OptState(phi, mode, _objective(mode), 0, mesh)
    state.history.append(HistoryEntry(0, state.J, mode.beta, opts.delta, True))
    logger.info(f"Start: beta={mode.beta:.6g}, J={state.J:.3e}")

    delta = opts.delta
    last_step = 0.0
    direction: Optional[LevelSetField] = None

    while state.iteration < opts.max_iter:
        if state.J <= opts.j_tol:
            state.status = "converged"
            break
        if direction is None:
            gradient = gradient_samples(bem_config(cfg, state.mesh), state.mode, state.phi,
                                        state.mesh, opts.samples)
            direction = descent_direction(gradient, state.phi, opts.grid)

        trial = None
        trial_delta = delta
        for attempt in range(opts.retries + 1):
            try:
                phi_new = update_levelset(state.phi, direction, trial_delta)
                mesh_new = mesh_for(phi_new, opts)
                mode_new = track_eigenvalue(state.mode, bem_config(cfg, mesh_new), omega,
                                            last_step, workers=workers)
                trial = OptState(phi_new, mode_new, _objective(mode_new), state.iteration + 1,
                                 mesh_new)
                break
            except (TrackingError, EmptyShapeError, BoundaryClipError, NumericalError,
                    ValidationError) as exc:
                logger.warning(f"Iteration {state.iteration + 1} attempt {attempt + 1}: {exc.message}")
                trial_delta *= 0.5
        if trial is None:
            state.status = "tracking_lost"
            break

        try:
            next_delta = step_control(state.history, trial, trial_delta, opts)
        except StationaryPoint:
            state.history.append(HistoryEntry(trial.iteration, trial.J, trial.mode.beta,
                                              trial_delta, False))
            state.status = "stationary"
            break

        accepted = trial.J < state.J
        state.history.append(HistoryEntry(trial.iteration, trial.J, trial.mode.beta,
                                          trial_delta, accepted))
        if accepted:
            last_step = abs(trial.mode.beta - state.mode.beta)
            state.phi, state.mode, state.J, state.mesh = trial.phi, trial.mode, trial.J, trial.mesh
            direction = None
        state.iteration = trial.iteration
        delta = next_delta
        logger.info(
            f"Iteration {state.iteration}: J={trial.J:.3e} "
            f"({'accepted' if accepted else 'rejected'}), delta={trial_delta:.3g}"
        )
        if callback is not None:
            callback(state)

    if state.status == "running":
        state.status = "converged" if state.J <= opts.j_tol else "max_iter"
    return state


def verify_final(state: OptState, cfg: PeriodicConfig, omega: float, opts: OptOptions,
                 workers: Optional[int] = None) -> dict:
    """Re-solve the final design at ``opts.verify_elements`` elements."""
    mesh = mesh_for(state.phi, opts, opts.verify_elements)
    mode = track_eigenvalue(state.mode, bem_config(cfg, mesh), omega, radius=0.05,
                            workers=workers)
    result = {
        "n_elements": mesh.n_elements,
        "beta": [mode.beta.real, mode.beta.imag],
        "J": _objective(mode),
        "residual": mode.residual,
        "shift": abs(mode.beta - state.mode.beta),
    }
    state.verification = result
    logger.info(f"Verified at N={mesh.n_elements}: beta={mode.beta:.6g}")
    return result
