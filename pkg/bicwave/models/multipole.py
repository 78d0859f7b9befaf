"""
Multipole coefficient vectors and translation matrices.

Coefficient arrays are indexed by order n = -n_tr..n_tr, stored at array
position n + n_tr.
"""

from dataclasses import dataclass, field

import numpy as np

from bicwave.core.errors import ValidationError


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MultipoleVector:
    """Coefficients of a cylindrical-wave expansion about ``center``."""

    coeffs: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    k: complex = 1.0

    def __post_init__(self):
        coeffs = _frozen(self.coeffs)
        if coeffs.ndim != 1 or coeffs.size % 2 != 1:
            raise ValidationError(
                f"Multipole vector needs odd length 2*n_tr+1, got shape {coeffs.shape}"
            )
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "center", _frozen(self.center, float))
        object.__setattr__(self, "k", complex(self.k))

    @classmethod
    def zeros(cls, n_tr: int, center=(0.0, 0.0), k: complex = 1.0) -> "MultipoleVector":
        return cls(np.zeros(2 * n_tr + 1, dtype=complex), np.asarray(center, float), k)

    @property
    def n_tr(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n_tr, self.n_tr + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.n_tr:
            raise IndexError(f"order {n} outside -{self.n_tr}..{self.n_tr}")
        return self.coeffs[n + self.n_tr]

    def __len__(self) -> int:
        return self.coeffs.size

    def with_coeffs(self, coeffs) -> "MultipoleVector":
        return MultipoleVector(coeffs, self.center, self.k)

    def to_dict(self) -> dict:
        return {
            "n_tr": self.n_tr,
            "center": self.center.tolist(),
            "k": [self.k.real, self.k.imag],
            "coeffs": [[c.real, c.imag] for c in self.coeffs],
        }


@dataclass(frozen=True)
class TranslationMatrix:
    """entries[n][m] = O_{m-n}(displacement); maps outgoing to regular coefficients."""

    entries: np.ndarray
    displacement: np.ndarray
    k: complex

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        object.__setattr__(self, "displacement", _frozen(self.displacement, float))
        object.__setattr__(self, "k", complex(self.k))

    @property
    def n_tr(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    def apply(self, vector: MultipoleVector) -> MultipoleVector:
        """Re-expand outgoing coefficients about ``vector.center + displacement``."""
        if vector.n_tr != self.n_tr:
            raise ValidationError(
                f"Truncation mismatch: vector n_tr={vector.n_tr}, matrix n_tr={self.n_tr}"
            )
        return MultipoleVector(
            self.entries @ vector.coeffs, vector.center + self.displacement, self.k
        )
