"""
Incident fields: plane waves and a unit line source.

Each model evaluates itself (value and gradient) and expands itself in
regular waves about a scatterer center.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from bicwave.core.errors import SingularArgumentError, ValidationError
from bicwave.models.multipole import MultipoleVector
from bicwave.services.cylwave import hankel1, plane_wave_coeffs, point_source_coeffs


@dataclass(frozen=True)
class PlaneWave:
    """amplitude * exp(i k p.x) with unit direction p."""

    direction: Tuple[float, float] = (1.0, 0.0)
    amplitude: complex = 1.0

    def __post_init__(self):
        p = tuple(float(v) for v in self.direction)
        if abs(np.hypot(*p) - 1.0) > 1e-12:
            raise ValidationError(f"Plane-wave direction must be a unit vector, got {list(p)}")
        object.__setattr__(self, "direction", p)

    def field(self, points, k: complex):
        """Values (M,) and gradients (M, 2)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        p = np.asarray(self.direction)
        u = self.amplitude * np.exp(1j * complex(k) * (pts @ p))
        return u, 1j * complex(k) * u[:, None] * p[None, :]

    def coefficients(self, center, k: complex, n_tr: int) -> MultipoleVector:
        center = np.asarray(center, dtype=float)
        phase = self.amplitude * np.exp(1j * complex(k) * (center @ np.asarray(self.direction)))
        base = plane_wave_coeffs(self.direction, n_tr, k, center)
        return base.with_coeffs(phase * base.coeffs)

    def to_dict(self) -> dict:
        return {"kind": "plane_wave", "direction": list(self.direction)}


@dataclass(frozen=True)
class PointSource:
    """amplitude * H1_0(k |x - x_src|)."""

    position: Tuple[float, float] = (-1.0, 0.0)
    amplitude: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))

    def field(self, points, k: complex):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        rel = pts - np.asarray(self.position)
        r = np.hypot(rel[:, 0], rel[:, 1])
        if np.any(r == 0):
            raise SingularArgumentError("Field requested at the source position")
        z = complex(k) * r
        u = self.amplitude * hankel1(0, z)
        # d/dr H0 = -H1
        radial = -complex(k) * self.amplitude * hankel1(1, z)
        return u, radial[:, None] * rel / r[:, None]

    def coefficients(self, center, k: complex, n_tr: int) -> MultipoleVector:
        base = point_source_coeffs(self.position, center, k, n_tr)
        return base.with_coeffs(self.amplitude * base.coeffs)

    def to_dict(self) -> dict:
        return {"kind": "point_source", "position": list(self.position)}
