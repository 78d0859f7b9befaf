"""
Run-config loading and translation into model objects.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type

import numpy as np
from marshmallow import ValidationError as SchemaError

from bicwave.cli.schemas import RunConfigSchema
from bicwave.core.config import Config
from bicwave.core.errors import ConfigError
from bicwave.models.eigen import ContourSpec
from bicwave.models.geometry import BoundaryMesh, CircleShape
from bicwave.models.medium import Medium
from bicwave.models.modes import PeriodicConfig
from bicwave.models.optimization import OptOptions
from bicwave.services import io
from bicwave.services.mesh import discretize_circle
from bicwave.services.topopt import mesh_for

logger = logging.getLogger(__name__)

RECIPES_DIR = Path(__file__).resolve().parent.parent / "recipes"


def bundled_recipes() -> List[str]:
    return sorted(path.stem for path in RECIPES_DIR.glob("*.json"))


def resolve_config_path(source: str) -> Path:
    """
    A path to a run config, or the name of a bundled recipe.

    Raises:
        ConfigError: neither a readable file nor a known recipe
    """
    path = Path(source)
    if path.is_file():
        return path
    recipe = RECIPES_DIR / f"{source}.json"
    if recipe.is_file():
        return recipe
    raise ConfigError(
        f"No config file or bundled recipe named '{source}'",
        {"recipes": bundled_recipes()},
    )


@dataclass
class RunConfig:
    """A validated run config and the directory its relative paths resolve against."""

    command: str
    data: Dict[str, Any]
    base_dir: Path
    source: Path
    raw: Dict[str, Any] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return self.data.get(name) or {}

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else self.base_dir / path

    def resolved(self) -> Dict[str, Any]:
        """Validated config in JSON form, for the metadata record."""
        return RunConfigSchema().dump(self.data)


def load_run_config(source: str, command: str) -> RunConfig:
    """
    Read and validate a run config for ``command``.

    Raises:
        ConfigError: unreadable JSON, unknown keys, missing or invalid values,
            or a config written for another command
    """
    path = resolve_config_path(source)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: a run config must be a JSON object")

    declared = raw.get("command", command)
    if declared != command:
        raise ConfigError(
            f"{path} is a '{declared}' config, not '{command}'",
            {"declared": declared, "requested": command},
        )

    try:
        data = RunConfigSchema().load({**raw, "command": command})
    except SchemaError as exc:
        raise ConfigError(f"{path}: invalid run config", {"errors": exc.messages}) from exc

    logger.debug(f"Loaded {command} config from {path}")
    return RunConfig(command, data, path.parent, path, raw)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_media(run: RunConfig) -> Tuple[Medium, Medium]:
    media = run.section("media")
    return (
        Medium(media["rho"], media["kappa"]),
        Medium(media["rho_hat"], media["kappa_hat"]),
    )


def lattice_x0(run: RunConfig) -> Tuple[float, float]:
    x0 = run.section("lattice").get("x0") or [0.0, 0.0]
    return float(x0[0]), float(x0[1])


def build_shape(run: RunConfig, config: Type[Config], x0=(0.0, 0.0)):
    """BoundaryMesh for the BEM solver, CircleShape for the analytic one."""
    geometry = run.section("geometry")
    kind = geometry["kind"]
    if kind == "circle":
        center = geometry.get("center") or list(x0)
        if geometry["solver"] == "analytic":
            return CircleShape(geometry["radius"], tuple(center))
        return discretize_circle(center, geometry["radius"], geometry["n_elements"])
    path = run.resolve(geometry["path"])
    if not path.is_file():
        raise ConfigError(f"Geometry file not found: {path}")
    if kind == "polyline":
        return io.read_polyline(path)
    phi = io.read_levelset(path)
    opts = OptOptions.from_config(config, cells=geometry["cells"], n_elements=geometry["n_elements"])
    return mesh_for(phi, opts)


def build_periodic(run: RunConfig, config: Type[Config],
                   shape: Optional[object] = None) -> PeriodicConfig:
    exterior, interior = build_media(run)
    lattice = run.section("lattice")
    x0 = lattice_x0(run)
    shape = shape if shape is not None else build_shape(run, config, x0)
    solver = "analytic" if isinstance(shape, CircleShape) else "bem"
    return PeriodicConfig(
        L=lattice["L"],
        exterior=exterior,
        interior=interior,
        shape=shape,
        x0=x0,
        n_tr=lattice.get("n_tr", config.N_TR),
        solver=solver,
        s=lattice.get("s", config.LATTICE_SPLIT),
    )


def build_contour(run: RunConfig, config: Type[Config], section: str = "contour") -> ContourSpec:
    params = dict(run.section(section))
    center = params.pop("center")
    radius = params.pop("radius")
    return ContourSpec.from_config(center, radius, config, **params)


def build_opt_options(run: RunConfig, config: Type[Config]) -> OptOptions:
    params = run.section("optimization")
    keys = ("delta", "delta_min", "delta_max", "j_tol", "max_iter", "n_elements",
            "verify_elements", "grid", "cells", "samples", "seed_radius", "snapshot_every")
    return OptOptions.from_config(config, **{key: params.get(key) for key in keys})


def omega_grid(section: Dict[str, Any]) -> np.ndarray:
    return np.linspace(section["omega_min"], section["omega_max"], section["points"])


def geometry_hash(shape) -> Optional[str]:
    if isinstance(shape, (BoundaryMesh, CircleShape)):
        return shape.geometry_hash
    return None
