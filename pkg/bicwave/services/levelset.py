"""
B-spline level-set evaluation, L2 projection and inner products over the
design domain.
"""

import logging
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy import linalg
from scipy.interpolate import BSpline

from bicwave.core.errors import DomainError, ValidationError
from bicwave.models.geometry import LevelSetField

logger = logging.getLogger(__name__)

GAUSS_POINTS_PER_CELL = 4


def _space(grid: int, x_lo: float, x_hi: float, degree: int) -> LevelSetField:
    return LevelSetField(np.zeros((grid, grid)), x_lo, x_hi, degree)


def basis_matrix(field: LevelSetField, x) -> np.ndarray:
    """Dense (M, grid) matrix of 1-D B-spline values at coordinates ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    # design_matrix wants the half-open base interval
    x = np.minimum(x, np.nextafter(field.x_hi, field.x_lo))
    return BSpline.design_matrix(x, field.knots, field.degree).toarray()


def _check_inside(field: LevelSetField, pts: np.ndarray) -> None:
    tol = 1e-12 * (field.x_hi - field.x_lo)
    outside = (pts < field.x_lo - tol) | (pts > field.x_hi + tol)
    if np.any(outside):
        bad = pts[np.any(outside, axis=1)][0]
        raise DomainError(
            f"Point {bad.tolist()} lies outside the design domain "
            f"[{field.x_lo}, {field.x_hi}]^2"
        )


def levelset_eval(field: LevelSetField, x) -> np.ndarray:
    """
    Evaluate phi at one point (shape (2,)) or many points (shape (M, 2)).

    Raises:
        DomainError: if a point lies outside the design domain
    """
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    _check_inside(field, pts)
    bx = basis_matrix(field, pts[:, 0])
    by = basis_matrix(field, pts[:, 1])
    values = np.einsum("mi,ij,mj->m", bx, field.coeffs, by)
    return values[0] if scalar else values


def levelset_grid(field: LevelSetField, xs, ys) -> np.ndarray:
    """phi on the tensor grid xs x ys, shape (len(xs), len(ys))."""
    return basis_matrix(field, xs) @ field.coeffs @ basis_matrix(field, ys).T


# ---------------------------------------------------------------------------
# Quadrature and Gram matrices
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _axis_rule(grid: int, x_lo: float, x_hi: float, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    field = _space(grid, x_lo, x_hi, degree)
    breaks = np.unique(field.knots)
    g, w = np.polynomial.legendre.leggauss(GAUSS_POINTS_PER_CELL)
    half = 0.5 * np.diff(breaks)
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def quadrature_rule(field: LevelSetField) -> Tuple[np.ndarray, np.ndarray]:
    """Per-axis composite Gauss-Legendre nodes and weights (4 per knot span)."""
    return _axis_rule(*field.space_key())


@lru_cache(maxsize=16)
def _gram(grid: int, x_lo: float, x_hi: float, degree: int) -> np.ndarray:
    field = _space(grid, x_lo, x_hi, degree)
    nodes, weights = _axis_rule(grid, x_lo, x_hi, degree)
    b = basis_matrix(field, nodes)
    gram = b.T @ (weights[:, None] * b)
    gram.flags.writeable = False
    return gram


def gram_matrix(field: LevelSetField) -> np.ndarray:
    """1-D Gram matrix; the 2-D one is its Kronecker square."""
    return _gram(*field.space_key())


# ---------------------------------------------------------------------------
# Projection and inner products
# ---------------------------------------------------------------------------


def l2_project(values: Callable[[np.ndarray], np.ndarray], grid: int = 64,
               x_lo: float = -0.354, x_hi: float = 0.354, degree: int = 3) -> LevelSetField:
    """
    L2-project a function onto the cubic spline space over the design domain.

    Args:
        values: callable mapping (M, 2) points to (M,) real values
        grid: control values per axis
        x_lo, x_hi: design domain bounds
        degree: spline degree

    Returns:
        LevelSetField minimizing the L2 distance to ``values``
    """
    template = _space(grid, x_lo, x_hi, degree)
    nodes, weights = quadrature_rule(template)
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    samples = np.asarray(values(np.column_stack([xx.ravel(), yy.ravel()])), dtype=float)
    samples = samples.reshape(len(nodes), len(nodes))

    b = basis_matrix(template, nodes)
    rhs = (b.T * weights) @ samples @ (weights[:, None] * b)

    try:
        factor = linalg.cho_factor(gram_matrix(template))
        half = linalg.cho_solve(factor, rhs)
        coeffs = linalg.cho_solve(factor, half.T).T
    except linalg.LinAlgError as exc:
        raise ValidationError(f"Singular Gram matrix for grid {grid}: {exc}") from exc

    logger.debug(f"Projected onto {grid}x{grid} spline grid")
    return template.with_coeffs(coeffs)


def l2_inner(f: LevelSetField, g: LevelSetField) -> float:
    """(f, g) over the design domain, exact for spline products."""
    if not f.same_space(g):
        raise ValidationError(
            "Cannot take inner product of fields on different grids",
            {"left": f.space_key(), "right": g.space_key()},
        )
    gram = gram_matrix(f)
    return float(np.sum(f.coeffs * (gram @ g.coeffs @ gram)))


def l2_norm(field: LevelSetField) -> float:
    return float(np.sqrt(max(l2_inner(field, field), 0.0)))


def normalize(field: LevelSetField) -> LevelSetField:
    """Scale to unit L2 norm."""
    norm = l2_norm(field)
    if norm == 0.0:
        raise ValidationError("Cannot normalize a zero level-set field")
    return field * (1.0 / norm)


def sample_at_greville(func: Callable[[np.ndarray], np.ndarray], grid: int = 64,
                       x_lo: float = -0.354, x_hi: float = 0.354,
                       degree: int = 3) -> LevelSetField:
    """Coefficients taken as samples of ``func`` at the Greville abscissae."""
    template = _space(grid, x_lo, x_hi, degree)
    gx = template.greville
    xx, yy = np.meshgrid(gx, gx, indexing="ij")
    coeffs = np.asarray(func(np.column_stack([xx.ravel(), yy.ravel()])), dtype=float)
    return template.with_coeffs(coeffs.reshape(grid, grid))
