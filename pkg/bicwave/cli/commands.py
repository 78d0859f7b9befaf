"""
Experiment commands.

Each handler reads its sections from the run config, calls the services
and writes tables into the output directory; the returned dict is the
run summary printed to the console and stored in the metadata.
"""

import logging
from functools import partial
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from bicwave.cli import RunContext, cli, execute, run_options
from bicwave.cli.runconfig import (
    build_contour,
    build_media,
    build_opt_options,
    build_periodic,
    build_shape,
    geometry_hash,
    lattice_x0,
    omega_grid,
)
from bicwave.core.errors import ConfigError, TrackingError
from bicwave.models.geometry import BoundaryMesh, CircleShape
from bicwave.models.modes import FieldGrid, ModeKind, ModeResult, PeriodicConfig
from bicwave.models.optimization import OptState
from bicwave.services import arrays, io, lattice, physics, sens, smat, topopt
from bicwave.services.incident import PlaneWave, PointSource
from bicwave.services.mesh import discretize_circle

logger = logging.getLogger(__name__)


def _modes_summary(modes: Sequence[ModeResult]) -> Dict[str, object]:
    summary: Dict[str, object] = {"modes": len(modes)}
    for index, mode in enumerate(modes[:5]):
        summary[f"mode {index}"] = (
            f"omega={mode.omega:.8g} beta={mode.beta:.8g} "
            f"res={mode.residual:.2e} {mode.classification.value}"
        )
    return summary


def _nearest(modes: Sequence[ModeResult], target: complex) -> ModeResult:
    if not modes:
        raise TrackingError(f"No eigenvalue found inside the contour around {target:.6g}")
    return min(modes, key=lambda m: abs(m.beta - target))


# ---------------------------------------------------------------------------
# smat
# ---------------------------------------------------------------------------


def _single_scatterer(rc: RunContext, n_tr: int, omega: complex):
    exterior, interior = build_media(rc.run)
    x0 = lattice_x0(rc.run)
    shape = build_shape(rc.run, rc.config, x0)
    rc.geometry_hash = geometry_hash(shape)
    if isinstance(shape, CircleShape):
        return shape, smat.mie_scattering_matrix(shape.radius, exterior, interior, omega, n_tr,
                                                 center=shape.center)
    return shape, smat.build_scattering_matrix(shape, exterior, interior, omega, x0, n_tr)


def run_smat(rc: RunContext) -> Dict[str, object]:
    run = rc.run
    omega = run.data["omega"]
    n_tr = run.section("lattice").get("n_tr", rc.config.N_TR)
    with rc.timed("scattering_matrix"):
        shape, scattering = _single_scatterer(rc, n_tr, omega)
    io.write_smat(rc.path("smat.csv"), scattering)
    if isinstance(shape, BoundaryMesh):
        io.write_polyline(rc.path("boundary.csv"), shape)

    summary: Dict[str, object] = {
        "n_tr": scattering.n_tr,
        "n_elements": shape.n_elements if isinstance(shape, BoundaryMesh) else 0,
        "unitarity_defect": smat.unitarity_defect(scattering),
        "reciprocity_defect": smat.reciprocity_defect(scattering),
    }

    geometry = run.section("geometry")
    if geometry["kind"] != "circle":
        return summary

    exterior, interior = build_media(run)
    radius = geometry["radius"]
    if isinstance(shape, BoundaryMesh):
        reference = smat.mie_scattering_matrix(radius, exterior, interior, omega, n_tr)
        summary["max_error_vs_partial_waves"] = float(np.max(np.abs(scattering.entries
                                                                    - reference.entries)))

    convergence = run.section("convergence")
    if convergence.get("element_counts"):
        with rc.timed("convergence"):
            rows = smat.convergence_study(radius, exterior, interior, omega, n_tr,
                                          convergence["element_counts"])
        io.write_table(rc.path("convergence.csv"), ["N", "max_error", "b0_change"],
                       ([r["N"], r["max_error"], r["b0_change"]] for r in rows))
        summary["convergence_rows"] = len(rows)
    if convergence.get("n_tr_list"):
        n = geometry["n_elements"]
        mesh = discretize_circle((0.0, 0.0), radius, n)
        rows = []
        with rc.timed("truncation_sweep"):
            for order in convergence["n_tr_list"]:
                bem_s = smat.build_scattering_matrix(mesh, exterior, interior, omega, (0.0, 0.0), order)
                mie_s = smat.mie_scattering_matrix(radius, exterior, interior, omega, order)
                rows.append([order, n, float(np.max(np.abs(bem_s.entries - mie_s.entries)))])
        io.write_table(rc.path("truncation.csv"), ["n_tr", "N", "max_error"], rows)
    return summary


@cli.command("smat")
@run_options
def smat_command(config_path, out, workers):
    """Scattering matrix of one scatterer, with optional convergence studies."""
    return execute("smat", run_smat, config_path, out, workers)


# ---------------------------------------------------------------------------
# eig-beta / eig-omega
# ---------------------------------------------------------------------------


def _dump_integrand(rc: RunContext, cfg: PeriodicConfig, omega: complex, beta: complex) -> None:
    samples = lattice.integrand_samples(omega, beta, cfg.L, cfg.n_tr, cfg.s, cfg.exterior.c)
    rows = []
    for row, order in enumerate(samples["orders"]):
        for tau, t, value in zip(samples["tau"], samples["t"], samples["integrand"][row]):
            rows.append([int(order), tau, t, value.real, value.imag])
    io.write_table(rc.path("integrand.csv"), ["order", "tau", "t", "re", "im"], rows)


def _self_convergence(rc: RunContext, cfg: PeriodicConfig, omega: complex, target: complex,
                      counts: List[int]) -> int:
    """Eigenvalue nearest ``target`` for each BEM resolution of a circle."""
    geometry = rc.run.section("geometry")
    contour = build_contour(rc.run, rc.config)
    rows = []
    previous: Optional[complex] = None
    for n in counts:
        mesh = discretize_circle(geometry.get("center") or cfg.x0, geometry["radius"], n)
        modes = physics.eig_beta(cfg.with_shape(mesh), omega, contour, rc.workers)
        beta = _nearest(modes, target).beta
        change = abs(beta - previous) if previous is not None else float("nan")
        rows.append([n, beta.real, beta.imag, change])
        previous = beta
        logger.info(f"N={n}: beta={beta:.10g}")
    io.write_table(rc.path("convergence.csv"), ["N", "re_beta", "im_beta", "change"], rows)
    return len(rows)


def run_eig_beta(rc: RunContext) -> Dict[str, object]:
    run = rc.run
    cfg = build_periodic(run, rc.config)
    rc.geometry_hash = geometry_hash(cfg.shape)
    contour = build_contour(run, rc.config)
    omega = run.data["omega"]
    with rc.timed("eig_beta"):
        modes = physics.eig_beta(cfg, omega, contour, rc.workers)
    io.write_modes(rc.path("eigenvalues.csv"), modes)

    if run.section("lattice").get("dump_integrand"):
        _dump_integrand(rc, cfg, omega, contour.center)

    summary = _modes_summary(modes)
    counts = run.section("convergence").get("element_counts")
    if counts:
        if run.section("geometry")["kind"] != "circle" or cfg.solver != "bem":
            raise ConfigError("Resolution sweeps need a BEM circle geometry")
        target = modes[0].beta if modes else contour.center
        with rc.timed("convergence"):
            summary["convergence_rows"] = _self_convergence(rc, cfg, omega, target, counts)
    return summary


@cli.command("eig-beta")
@run_options
def eig_beta_command(config_path, out, workers):
    """Floquet wavenumbers inside a contour at fixed omega."""
    return execute("eig-beta", run_eig_beta, config_path, out, workers)


def run_eig_omega(rc: RunContext) -> Dict[str, object]:
    run = rc.run
    cfg = build_periodic(run, rc.config)
    rc.geometry_hash = geometry_hash(cfg.shape)
    contour = build_contour(run, rc.config)
    with rc.timed("eig_omega"):
        modes = physics.eig_omega(cfg, run.data["beta"], contour, rc.workers)
    io.write_modes(rc.path("eigenvalues.csv"), modes)
    return _modes_summary(modes)


@cli.command("eig-omega")
@run_options
def eig_omega_command(config_path, out, workers):
    """Complex resonant frequencies inside a contour at fixed beta."""
    return execute("eig-omega", run_eig_omega, config_path, out, workers)


# ---------------------------------------------------------------------------
# band
# ---------------------------------------------------------------------------


def emit_band_plot_data(result: physics.BandSweepResult, out: Path, omega_values,
                        L: float, c: float = 1.0) -> Dict[str, Path]:
    """band.csv with folded eigenvalues and lightlines.csv for n in -2..2."""
    out = Path(out)
    return {
        "band": io.write_band(out / "band.csv", result.modes),
        "lightlines": io.write_lightlines(out / "lightlines.csv",
                                          physics.light_lines(omega_values, L, c)),
    }


def run_band(rc: RunContext) -> Dict[str, object]:
    run = rc.run
    cfg = build_periodic(run, rc.config)
    rc.geometry_hash = geometry_hash(cfg.shape)
    sweep = run.section("sweep")
    grid = omega_grid(sweep)
    contours_for = partial(
        physics.strip_contours,
        radius=sweep.get("radius", rc.config.BAND_RADIUS),
        margin=rc.config.BAND_MARGIN,
        im_max=sweep.get("im_max", rc.config.BAND_IM_MAX),
    )
    tol_im = sweep.get("tol_im", rc.config.MODE_TOL_IM)
    with rc.timed("band_sweep"):
        result = physics.band_sweep(cfg, grid, contours_for, rc.workers, tol_im)
    emit_band_plot_data(result, rc.out, grid, cfg.L, cfg.exterior.c)
    rc.extra["failures"] = result.failures

    candidates = [m for m in result.modes if m.classification == ModeKind.BIC_CANDIDATE]
    summary: Dict[str, object] = {
        "frequencies": len(grid),
        "modes": len(result.modes),
        "bic_candidates": len(candidates),
        "failed_frequencies": len(result.failures),
    }
    for index, mode in enumerate(candidates[:5]):
        summary[f"bic {index}"] = f"omega={mode.omega.real:.8g} beta={mode.beta:.8g}"
    return summary


@cli.command("band")
@run_options
def band_command(config_path, out, workers):
    """Band structure over an omega grid, with light lines for plotting."""
    return execute("band", run_band, config_path, out, workers)


# ---------------------------------------------------------------------------
# tdcheck
# ---------------------------------------------------------------------------


def _td_points(cfg: PeriodicConfig, samples: int) -> np.ndarray:
    half = 0.45 * cfg.L
    xs = np.linspace(-half, half, samples)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()]) + np.asarray(cfg.x0)
    if isinstance(cfg.shape, BoundaryMesh):
        clearance = cfg.shape.mean_element_length
    else:
        clearance = 1e-3 * cfg.shape.radius
    return pts[cfg.shape.distance(pts) > clearance]


def run_tdcheck(rc: RunContext) -> Dict[str, object]:
    run = rc.run
    cfg = build_periodic(run, rc.config)
    rc.geometry_hash = geometry_hash(cfg.shape)
    contour = build_contour(run, rc.config)
    omega = run.data["omega"]
    with rc.timed("eig_beta"):
        mode = _nearest(physics.eig_beta(cfg, omega, contour, rc.workers), contour.center)
    io.write_modes(rc.path("eigenvalues.csv"), [mode])
    summary: Dict[str, object] = {"beta": mode.beta}

    sensitivity = run.section("sensitivity")
    if sensitivity.get("eps"):
        with rc.timed("fd_check"):
            rows = sens.fd_check(cfg, mode, sensitivity["x"], sensitivity["eps"], rc.workers)
        io.write_table(
            rc.path("tdcheck.csv"),
            ["eps", "n_elements", "re_beta", "im_beta", "re_fd", "im_fd", "re_dt_beta",
             "im_dt_beta", "rel_err_re", "rel_err_im"],
            ([r["eps"], r["n_elements"], r["beta"].real, r["beta"].imag, r["fd"].real,
              r["fd"].imag, r["dt_beta"].real, r["dt_beta"].imag, r["rel_err_re"],
              r["rel_err_im"]] for r in rows),
        )
        summary["dt_beta"] = rows[0]["dt_beta"]
        summary["max_rel_err_re"] = max(r["rel_err_re"] for r in rows)
        summary["max_rel_err_im"] = max(r["rel_err_im"] for r in rows)

    if sensitivity.get("samples"):
        with rc.timed("td_field"):
            gradient = sens.topo_gradient_field(cfg, mode, _td_points(cfg, sensitivity["samples"]))
        io.write_td_field(rc.path("td_field.csv"), gradient)
        summary["td_samples"] = len(gradient.points)
    return summary


@cli.command("tdcheck")
@run_options
def tdcheck_command(config_path, out, workers):
    """Topological derivative of beta against finite differences."""
    return execute("tdcheck", run_tdcheck, config_path, out, workers)


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def _snapshot_writer(rc: RunContext, every: int):
    snapshots = rc.path("snapshots")

    def callback(state: OptState) -> None:
        if every and state.iteration % every == 0:
            io.write_levelset(snapshots / f"levelset_{state.iteration:04d}.txt", state.phi)
            if state.mesh is not None:
                io.write_polyline(snapshots / f"boundary_{state.iteration:04d}.csv", state.mesh)

    return callback


def run_optimize(rc: RunContext) -> Dict[str, object]:
    run = rc.run
    params = run.section("optimization")
    opts = build_opt_options(run, rc.config)
    if params.get("init_path"):
        init = io.read_levelset(run.resolve(params["init_path"]))
    else:
        init = topopt.initial_levelset(params["init_radius"], opts.grid,
                                       -rc.config.DESIGN_HALF_WIDTH, rc.config.DESIGN_HALF_WIDTH)
    cfg = build_periodic(run, rc.config, shape=topopt.mesh_for(init, opts))
    omega = params["omega"]

    with rc.timed("optimize"):
        state = topopt.optimize(init, cfg, omega, params["beta_seed"], opts, rc.workers,
                                _snapshot_writer(rc, opts.snapshot_every))
    io.write_history(rc.path("history.csv"), state.history)
    io.write_levelset(rc.path("levelset.txt"), state.phi)
    if state.mesh is not None:
        io.write_polyline(rc.path("boundary.csv"), state.mesh)
        rc.geometry_hash = state.mesh.geometry_hash
    rc.extra["optimization"] = state.to_dict()

    if state.status == "tracking_lost":
        raise TrackingError(
            f"Lost the tracked eigenvalue after iteration {state.iteration}",
            {"iteration": state.iteration, "J": state.J},
        )

    if opts.verify_elements:
        with rc.timed("verify"):
            try:
                topopt.verify_final(state, cfg, omega, opts, rc.workers)
            except TrackingError as exc:
                logger.warning(f"Verification failed: {exc.message}")
                state.verification = exc.to_dict()["error"]
        rc.extra["optimization"] = state.to_dict()

    initial_j = state.history[0].J if state.history else state.J
    return {
        "status": state.status,
        "iterations": state.iteration,
        "beta": state.beta,
        "J_initial": initial_j,
        "J_final": state.J,
        "accepted_steps": len(state.accepted_history) - 1,
    }


@cli.command("optimize")
@run_options
def optimize_command(config_path, out, workers):
    """Level-set optimization toward Im beta = 0."""
    return execute("optimize", run_optimize, config_path, out, workers)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


def build_template(rc: RunContext) -> arrays.ArrayTemplate:
    run = rc.run
    section = run.section("spectrum")
    exterior, interior = build_media(run)
    shape = build_shape(run, rc.config, (0.0, 0.0))
    rc.geometry_hash = geometry_hash(shape)
    if section.get("centers") is not None:
        centers = tuple(tuple(c) for c in section["centers"])
    else:
        count, spacing = section["count"], section["spacing"]
        centers = tuple((i * spacing, 0.0) for i in range(count))
    if section.get("source") is not None:
        incident = PointSource(tuple(section["source"]))
    else:
        incident = PlaneWave(tuple(section.get("direction") or (1.0, 0.0)))
    return arrays.ArrayTemplate(
        shape=shape,
        exterior=exterior,
        interior=interior,
        centers=centers,
        n_tr=run.section("lattice").get("n_tr", rc.config.N_TR),
        incident=incident,
    )


def _segment(section) -> arrays.Segment:
    return tuple(section["start"]), tuple(section["end"])


def run_spectrum(rc: RunContext) -> Dict[str, object]:
    section = rc.run.section("spectrum")
    template = build_template(rc)
    with rc.timed("spectrum"):
        result = arrays.transmittance_spectrum(template, omega_grid(section),
                                               _segment(section["gamma_in"]),
                                               _segment(section["gamma_out"]), section["quad_n"])
    io.write_spectrum(rc.path("spectrum.csv"), result.rows)
    rc.extra["failures"] = result.failures
    values = [t for _, t in result.rows]
    return {
        "scatterers": len(template.centers),
        "frequencies": len(result.rows),
        "failed_frequencies": len(result.failures),
        "T_min": min(values) if values else float("nan"),
        "T_max": max(values) if values else float("nan"),
    }


@cli.command("spectrum")
@run_options
def spectrum_command(config_path, out, workers):
    """Transmittance of a finite array over an omega grid."""
    return execute("spectrum", run_spectrum, config_path, out, workers)


# ---------------------------------------------------------------------------
# field
# ---------------------------------------------------------------------------


def run_field(rc: RunContext) -> Dict[str, object]:
    run = rc.run
    cfg = build_periodic(run, rc.config)
    rc.geometry_hash = geometry_hash(cfg.shape)
    contour = build_contour(run, rc.config)
    section = run.section("field")
    with rc.timed("eig_beta"):
        modes = physics.eig_beta(cfg, run.data["omega"], contour, rc.workers)
    if not modes:
        raise TrackingError(f"No eigenvalue found inside the contour around {contour.center:.6g}")
    modes = sorted(modes, key=lambda m: m.residual)[:section["modes"]]
    io.write_modes(rc.path("eigenvalues.csv"), modes)

    grid = FieldGrid(**section["grid"])
    points = grid.points()
    with rc.timed("mode_field"):
        for index, mode in enumerate(modes):
            values = physics.mode_field(cfg, mode, grid, section["copies"])
            io.write_field(rc.path(f"field_{index}.csv"), points, values)
    summary = _modes_summary(modes)
    summary["grid_points"] = len(points)
    return summary


@cli.command("field")
@run_options
def field_command(config_path, out, workers):
    """Mode profiles on a rectangular grid."""
    return execute("field", run_field, config_path, out, workers)
