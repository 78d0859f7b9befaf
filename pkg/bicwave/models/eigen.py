"""
Contours and eigenpairs for contour-integral eigensolvers.
"""

from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional

import numpy as np

from bicwave.core.config import Config, settings
from bicwave.core.errors import ValidationError


@dataclass(frozen=True)
class ContourSpec:
    """Circular contour with block-SS parameters."""

    center: complex
    radius: float
    quad_points: int = 32
    moments: int = 8
    probes: int = 8
    rank_tol: float = 1e-10
    seed: int = 0
    residual_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise ValidationError(f"Contour radius must be positive, got {self.radius}")
        if self.quad_points < 8:
            raise ValidationError(f"quad_points must be >= 8, got {self.quad_points}")
        if self.moments < 1 or self.probes < 1:
            raise ValidationError("moments and probes must be >= 1")
        if not 0 < self.rank_tol < 1:
            raise ValidationError(f"rank_tol must lie in (0, 1), got {self.rank_tol}")

    @classmethod
    def from_config(cls, center: complex, radius: float, config: Config = settings,
                    **overrides) -> "ContourSpec":
        params = dict(
            quad_points=config.SSM_QUAD_POINTS,
            moments=config.SSM_MOMENTS,
            probes=config.SSM_PROBES,
            rank_tol=config.SSM_RANK_TOL,
            seed=config.SSM_SEED,
            residual_tol=config.SSM_RESIDUAL_TOL,
        )
        params.update({key: value for key, value in overrides.items() if value is not None})
        return cls(center, radius, **params)

    def nodes(self) -> np.ndarray:
        """Trapezoid nodes at angles 2*pi*(j + 1/2)/N."""
        theta = 2.0 * np.pi * (np.arange(self.quad_points) + 0.5) / self.quad_points
        return self.center + self.radius * np.exp(1j * theta)

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return abs(complex(z) - self.center) < self.radius * (1.0 - margin)

    def with_center(self, center: complex, radius: Optional[float] = None) -> "ContourSpec":
        return replace(self, center=complex(center), radius=self.radius if radius is None else radius)

    def to_dict(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "radius": self.radius,
            "quad_points": self.quad_points,
            "moments": self.moments,
            "probes": self.probes,
            "rank_tol": self.rank_tol,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with unit right vector and its relative residual."""

    z: complex
    right_vec: np.ndarray
    residual: float
    left_vec: Optional[np.ndarray] = None
    refinement: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        vec = np.array(self.right_vec, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValidationError("Eigenvector must be nonzero")
        vec = vec / norm
        vec.flags.writeable = False
        object.__setattr__(self, "right_vec", vec)
        object.__setattr__(self, "residual", float(self.residual))

    def with_left(self, left_vec: np.ndarray) -> "EigenPair":
        return replace(self, left_vec=np.asarray(left_vec, dtype=complex))

    def to_dict(self) -> dict:
        return {
            "z": [self.z.real, self.z.imag],
            "residual": self.residual,
            "refinement": self.refinement,
        }


@dataclass
class SsmResult:
    """Accepted eigenpairs plus candidates rejected by the residual filter."""

    pairs: List[EigenPair] = field(default_factory=list)
    rejected: List[EigenPair] = field(default_factory=list)
    rank: int = 0
    singular_values: Optional[np.ndarray] = None

    def __iter__(self) -> Iterator[EigenPair]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, index: int) -> EigenPair:
        return self.pairs[index]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([pair.z for pair in self.pairs], dtype=complex)

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "accepted": [pair.to_dict() for pair in self.pairs],
            "rejected": [pair.to_dict() for pair in self.rejected],
        }
