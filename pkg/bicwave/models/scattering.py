"""
Boundary densities and scattering matrices.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from bicwave.core.errors import ValidationError
from bicwave.models.geometry import BoundaryMesh, CircleShape
from bicwave.models.medium import Medium


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class BoundaryDensities:
    """
    Pressure trace ``u`` and normalized flux trace ``q = (1/rho) du/dn|+``.

    Arrays have shape (N,) for one incident field or (N, P) for P fields
    solved against the same factorization.
    """

    u: np.ndarray
    q: np.ndarray
    omega: complex
    exterior: Medium
    interior: Medium

    def __post_init__(self):
        u, q = _frozen(self.u), _frozen(self.q)
        if u.shape != q.shape:
            raise ValidationError(f"Density shapes differ: u{u.shape} vs q{q.shape}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "omega", complex(self.omega))

    @property
    def n_elements(self) -> int:
        return self.u.shape[0]

    @property
    def n_columns(self) -> int:
        return 1 if self.u.ndim == 1 else self.u.shape[1]

    def column(self, j: int) -> "BoundaryDensities":
        if self.u.ndim == 1:
            if j != 0:
                raise IndexError(j)
            return self
        return BoundaryDensities(self.u[:, j], self.q[:, j], self.omega, self.exterior, self.interior)

    def as_matrix(self):
        """(u, q) as 2-D arrays with one column per incident field."""
        if self.u.ndim == 1:
            return self.u[:, None], self.q[:, None]
        return self.u, self.q


@dataclass(frozen=True)
class ScatteringMatrix:
    """
    Truncated scattering matrix of one scatterer about ``center``.

    ``entries[n + n_tr, m + n_tr]`` maps regular order m to outgoing order n.
    BEM-backed matrices keep the mesh and per-order densities; analytic
    circles keep their interior partial-wave amplitudes instead.
    """

    entries: np.ndarray
    center: np.ndarray
    enclosing_radius: float
    omega: complex
    exterior: Medium
    interior: Medium
    shape: Union[BoundaryMesh, CircleShape, None] = None
    densities: Optional[BoundaryDensities] = None
    interior_amplitudes: Optional[np.ndarray] = None

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] % 2 != 1:
            raise ValidationError(f"Scattering matrix must be square of odd size, got {entries.shape}")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "center", _frozen(self.center, float))
        object.__setattr__(self, "omega", complex(self.omega))
        if self.interior_amplitudes is not None:
            object.__setattr__(self, "interior_amplitudes", _frozen(self.interior_amplitudes))

    @property
    def n_tr(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n_tr, self.n_tr + 1)

    @property
    def k(self) -> complex:
        return self.exterior.wavenumber(self.omega)

    @property
    def k_interior(self) -> complex:
        return self.interior.wavenumber(self.omega)

    @property
    def has_fields(self) -> bool:
        return self.densities is not None or self.interior_amplitudes is not None

    def to_dict(self) -> dict:
        return {
            "n_tr": self.n_tr,
            "omega": [self.omega.real, self.omega.imag],
            "center": self.center.tolist(),
            "enclosing_radius": self.enclosing_radius,
            "exterior": self.exterior.to_dict(),
            "interior": self.interior.to_dict(),
            "backend": "bem" if self.densities is not None else "analytic",
        }
