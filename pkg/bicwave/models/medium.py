"""
Homogeneous acoustic medium.
"""

import math
from dataclasses import dataclass

from bicwave.core.errors import ValidationError


@dataclass(frozen=True)
class Medium:
    """Mass density ``rho`` and bulk modulus ``kappa`` of an acoustic material."""

    rho: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if not (self.rho > 0 and self.kappa > 0):
            raise ValidationError(
                f"Medium parameters must be positive, got rho={self.rho}, kappa={self.kappa}",
                {"rho": self.rho, "kappa": self.kappa},
            )

    @property
    def c(self) -> float:
        """Phase velocity sqrt(kappa / rho)."""
        return math.sqrt(self.kappa / self.rho)

    def wavenumber(self, omega: complex) -> complex:
        return complex(omega) / self.c

    def to_dict(self) -> dict:
        return {"rho": self.rho, "kappa": self.kappa}
