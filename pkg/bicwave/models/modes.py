"""
Periodic waveguide and finite-array configurations, and resonant modes.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from bicwave.core.errors import ValidationError, WellSeparationError
from bicwave.models.geometry import BoundaryMesh, CircleShape
from bicwave.models.medium import Medium
from bicwave.models.multipole import MultipoleVector
from bicwave.models.scattering import ScatteringMatrix

Shape = Union[BoundaryMesh, CircleShape]


class ModeKind(str, Enum):
    GUIDED = "guided"
    LEAKY = "leaky"
    BIC_CANDIDATE = "bic_candidate"


@dataclass(frozen=True)
class PeriodicConfig:
    """
    One scatterer per cell of the lattice a = (L, 0).

    ``solver`` picks the scattering-matrix backend: ``"bem"`` needs a
    BoundaryMesh, ``"analytic"`` a CircleShape.
    """

    L: float
    exterior: Medium
    interior: Medium
    shape: Shape
    x0: Tuple[float, float] = (0.0, 0.0)
    n_tr: int = 20
    solver: str = "bem"
    s: int = 2
    eta: Optional[complex] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not self.L > 0:
            raise ValidationError(f"Period L must be positive, got {self.L}")
        if self.n_tr < 0:
            raise ValidationError(f"n_tr must be >= 0, got {self.n_tr}")
        if self.solver not in ("bem", "analytic"):
            raise ValidationError(f"Unknown scattering solver '{self.solver}'")
        if self.solver == "analytic" and not isinstance(self.shape, CircleShape):
            raise ValidationError("The analytic solver needs a circle shape")
        if self.solver == "bem" and not isinstance(self.shape, BoundaryMesh):
            raise ValidationError("The BEM solver needs a boundary mesh")
        radius = self.enclosing_radius
        if not 2.0 * radius < self.L:
            raise WellSeparationError(
                f"Enclosing disks overlap: 2 * {radius:.4g} >= L = {self.L:g}",
                {"enclosing_radius": radius, "L": self.L},
            )

    @property
    def enclosing_radius(self) -> float:
        return self.shape.enclosing_radius(self.x0)

    @property
    def lattice_vector(self) -> np.ndarray:
        return np.array([self.L, 0.0])

    @property
    def n_elements(self) -> int:
        return self.shape.n_elements if isinstance(self.shape, BoundaryMesh) else 0

    @property
    def media_key(self) -> str:
        return (
            f"{self.exterior.rho!r}/{self.exterior.kappa!r}:"
            f"{self.interior.rho!r}/{self.interior.kappa!r}"
        )

    def with_shape(self, shape: Shape) -> "PeriodicConfig":
        return PeriodicConfig(self.L, self.exterior, self.interior, shape, self.x0,
                              self.n_tr, self.solver, self.s, self.eta)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "exterior": self.exterior.to_dict(),
            "interior": self.interior.to_dict(),
            "x0": list(self.x0),
            "n_tr": self.n_tr,
            "solver": self.solver,
            "s": self.s,
            "n_elements": self.n_elements,
            "geometry_hash": self.shape.geometry_hash,
        }


@dataclass(frozen=True)
class ModeResult:
    """Eigenpair (omega, beta) of the periodic system with its multipole vectors."""

    omega: complex
    beta: complex
    B: MultipoleVector
    residual: float
    classification: ModeKind
    B_left: Optional[np.ndarray] = None
    refinement: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "omega", complex(self.omega))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "classification", ModeKind(self.classification))

    def to_dict(self) -> dict:
        return {
            "omega": [self.omega.real, self.omega.imag],
            "beta": [self.beta.real, self.beta.imag],
            "residual": self.residual,
            "classification": self.classification.value,
            "refinement": self.refinement,
        }


@dataclass(frozen=True)
class ArrayMember:
    """A scatterer placed at ``center``; ``smat`` is expanded about its own center."""

    smat: ScatteringMatrix
    center: np.ndarray

    def __post_init__(self):
        center = np.array(self.center, dtype=float)
        center.flags.writeable = False
        object.__setattr__(self, "center", center)

    @property
    def radius(self) -> float:
        return self.smat.enclosing_radius

    def local(self, points: np.ndarray) -> np.ndarray:
        """Points relative to this member, in the matrix's own frame."""
        return points - self.center + self.smat.center


@dataclass(frozen=True)
class ArrayConfig:
    """Finite collection of scatterers in a common exterior medium."""

    members: Tuple[ArrayMember, ...] = field(default_factory=tuple)
    incident: Optional[object] = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.members:
            omegas = {m.smat.omega for m in self.members}
            if len(omegas) > 1:
                raise ValidationError("All scattering matrices must share one frequency")
        centers = [m.center for m in self.members]
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                gap = float(np.linalg.norm(centers[i] - centers[j]))
                if gap <= self.members[i].radius + self.members[j].radius:
                    raise WellSeparationError(
                        f"Scatterers {i} and {j} are not well separated",
                        {"i": i, "j": j, "distance": gap},
                    )

    @classmethod
    def from_template(cls, smat: ScatteringMatrix, centers: Sequence, incident=None) -> "ArrayConfig":
        return cls(tuple(ArrayMember(smat, c) for c in centers), incident)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def n_tr(self) -> int:
        return self.members[0].smat.n_tr if self.members else 0


@dataclass(frozen=True)
class FieldGrid:
    """Rectangular sampling grid [x_min, x_max] x [y_min, y_max]."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValidationError("Field grid needs at least one sample per axis")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValidationError("Field grid bounds are inverted")

    def points(self) -> np.ndarray:
        xs = np.linspace(self.x_min, self.x_max, self.nx)
        ys = np.linspace(self.y_min, self.y_max, self.ny)
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        return np.column_stack([gx.ravel(), gy.ravel()])
