"""
Error hierarchy for the toolkit.

Every error carries a machine-readable code and serializes to the same
``{"status": "error", "error": {...}}`` body the CLI writes to
``error.json``. The two families decide the process exit code.
"""

from typing import Any, Dict, Optional


class BicwaveError(Exception):
    """Base class for all toolkit errors."""

    code: str = "INTERNAL_ERROR"
    exit_code: int = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the error for diagnostics output."""
        return {
            "status": "error",
            "error": {
                "code": self.code,
                "message": self.message,
                "details": self.details,
            },
        }


# =====================================================
# Validation errors (exit code 2)
# =====================================================


class ValidationError(BicwaveError):
    code = "VALIDATION_ERROR"
    exit_code = 2


class ConfigError(ValidationError):
    code = "CONFIG_ERROR"


class WellSeparationError(ValidationError):
    code = "WELL_SEPARATION"


class BranchCutError(ValidationError):
    """Raised when a lattice-sum evaluation point sits on a branch cut."""

    code = "BRANCH_CUT"


class DomainError(ValidationError):
    code = "DOMAIN_ERROR"


class SingularArgumentError(ValidationError):
    code = "SINGULAR_ARGUMENT"


class OutOfRangeError(ValidationError):
    code = "OUT_OF_RANGE"


# =====================================================
# Numerical failures (exit code 3)
# =====================================================


class NumericalError(BicwaveError):
    code = "NUMERICAL_ERROR"
    exit_code = 3


class AssemblyError(NumericalError):
    code = "ASSEMBLY_ERROR"


class SolverError(NumericalError):
    code = "SOLVER_ERROR"


class NearSingularError(NumericalError):
    code = "NEAR_SINGULAR"


class QuadratureError(NumericalError):
    code = "QUADRATURE_TOLERANCE"


class QuadratureNodeError(NumericalError):
    code = "QUADRATURE_NODE_SINGULAR"


class DegenerateEigenvalueError(NumericalError):
    code = "DEGENERATE_EIGENVALUE"


class DegenerateModeError(NumericalError):
    code = "DEGENERATE_MODE"


class TrackingError(NumericalError):
    code = "TRACKING_LOST"


class EmptyShapeError(NumericalError):
    code = "EMPTY_SHAPE"


class BoundaryClipError(NumericalError):
    code = "BOUNDARY_CLIP"


class StateError(NumericalError):
    code = "STATE_ERROR"


class EvaluationDomainError(NumericalError):
    code = "EVALUATION_DOMAIN"


class TruncationError(NumericalError):
    code = "TRUNCATION_GUARD"


class StationaryPoint(NumericalError):
    """Signal: step size collapsed without a decrease of the objective."""

    code = "STATIONARY"
    exit_code = 0
