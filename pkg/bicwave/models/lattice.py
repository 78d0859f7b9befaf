"""
Quasi-periodic lattice-sum matrices.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from bicwave.core.errors import ValidationError


def toeplitz_from_orders(values: np.ndarray, n_tr: int) -> np.ndarray:
    """
    Square matrix with entry (i, j) = values[j - i + 2 n_tr].

    ``values`` holds one number per order difference -2n_tr..2n_tr.
    """
    values = np.asarray(values)
    if values.shape != (4 * n_tr + 1,):
        raise ValidationError(f"Expected {4 * n_tr + 1} order values, got {values.shape}")
    centre = 2 * n_tr
    column = values[centre - np.arange(2 * n_tr + 1)]
    row = values[centre + np.arange(2 * n_tr + 1)]
    return toeplitz(column, row)


@dataclass(frozen=True)
class LatticeSum:
    """T^G(omega, beta) and its beta-derivative for period L."""

    entries: np.ndarray
    d_beta_entries: np.ndarray
    omega: complex
    beta: complex
    L: float
    s: int = 2
    halvings: int = 0

    def __post_init__(self):
        for name in ("entries", "d_beta_entries"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "omega", complex(self.omega))
        object.__setattr__(self, "beta", complex(self.beta))

    @property
    def n_tr(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    def to_dict(self) -> dict:
        return {
            "n_tr": self.n_tr,
            "omega": [self.omega.real, self.omega.imag],
            "beta": [self.beta.real, self.beta.imag],
            "L": self.L,
            "s": self.s,
            "halvings": self.halvings,
        }
