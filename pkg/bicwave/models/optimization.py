"""
Optimization state, options and topological-derivative samples.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from bicwave.core.config import Config, settings
from bicwave.core.errors import ValidationError
from bicwave.models.geometry import BoundaryMesh, LevelSetField
from bicwave.models.modes import ModeResult

EXTERIOR = "exterior"
INTERIOR = "interior"


@dataclass(frozen=True)
class OptOptions:
    delta: float = 0.05
    delta_min: float = 1e-4
    delta_max: float = 1.0
    grow: float = 1.2
    j_tol: float = 1e-10
    max_iter: int = 200
    n_elements: int = 800
    verify_elements: int = 3200
    grid: int = 64
    cells: int = 128
    samples: int = 48
    retries: int = 5
    seed_radius: float = 0.1
    snapshot_every: int = 0

    def __post_init__(self):
        if not 0 < self.delta_min <= self.delta <= self.delta_max:
            raise ValidationError("Step sizes must satisfy 0 < delta_min <= delta <= delta_max")
        if self.max_iter < 0 or self.n_elements < 8:
            raise ValidationError("max_iter must be >= 0 and n_elements >= 8")

    @classmethod
    def from_config(cls, config: Config = settings, **overrides) -> "OptOptions":
        params = dict(
            delta=config.OPT_DELTA,
            delta_min=config.OPT_DELTA_MIN,
            delta_max=config.OPT_DELTA_MAX,
            j_tol=config.OPT_J_TOL,
            max_iter=config.OPT_MAX_ITER,
            n_elements=config.OPT_ELEMENTS,
            verify_elements=config.OPT_VERIFY_ELEMENTS,
            grid=config.OPT_GRID,
            cells=config.OPT_CELLS,
            samples=config.OPT_SAMPLES,
        )
        params.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**params)


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    J: float
    beta: complex
    delta: float
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "J": self.J,
            "re_beta": complex(self.beta).real,
            "im_beta": complex(self.beta).imag,
            "delta": self.delta,
            "accepted": self.accepted,
        }


@dataclass
class OptState:
    """Current design, its tracked mode and the run history."""

    phi: LevelSetField
    mode: ModeResult
    J: float
    iteration: int = 0
    mesh: Optional[BoundaryMesh] = None
    history: List[HistoryEntry] = field(default_factory=list)
    status: str = "running"
    verification: Optional[Dict] = None

    @property
    def beta(self) -> complex:
        return self.mode.beta

    @property
    def accepted_history(self) -> List[HistoryEntry]:
        return [entry for entry in self.history if entry.accepted]

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "J": self.J,
            "beta": [self.beta.real, self.beta.imag],
            "status": self.status,
            "verification": self.verification,
        }


@dataclass(frozen=True)
class TopoGradientField:
    """D_T beta samples with the side (exterior/interior) of every point."""

    points: np.ndarray
    samples: np.ndarray
    sides: np.ndarray
    omega: complex
    beta: complex

    def __post_init__(self):
        if not (len(self.points) == len(self.samples) == len(self.sides)):
            raise ValidationError("Points, samples and sides must have equal length")

    @property
    def interior(self) -> np.ndarray:
        return self.sides == INTERIOR

    @property
    def dt_objective(self) -> np.ndarray:
        """D_T J = 2 Im(beta) Im(D_T beta)."""
        return 2.0 * complex(self.beta).imag * np.imag(self.samples)

    def descent_field(self) -> np.ndarray:
        """D_T J on the exterior side, -D_T J on the interior side."""
        dtj = self.dt_objective
        return np.where(self.interior, -dtj, dtj)
