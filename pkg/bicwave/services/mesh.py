"""
Boundary discretization: circles, disk insertion and level-set contours.
"""

import logging
from typing import Dict, List

import numpy as np

from bicwave.core.errors import (
    BoundaryClipError,
    EmptyShapeError,
    ValidationError,
)
from bicwave.models.geometry import BoundaryMesh, LevelSetField
from bicwave.services.levelset import levelset_grid

logger = logging.getLogger(__name__)

MIN_LOOP_ELEMENTS = 8


def circle_vertices(center, radius: float, n: int, clockwise: bool = False) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(n) / n
    if clockwise:
        angles = -angles
    return np.asarray(center, float) + radius * np.column_stack([np.cos(angles), np.sin(angles)])


def discretize_circle(center, radius: float, N: int, clockwise: bool = False) -> BoundaryMesh:
    """
    Inscribed regular N-gon with vertices at angles 2*pi*j/N.

    Args:
        center: circle center
        radius: circle radius (> 0)
        N: number of chords
        clockwise: orient as a hole (material outside)

    Returns:
        BoundaryMesh with one loop
    """
    if not radius > 0:
        raise ValidationError(f"Circle radius must be positive, got {radius}")
    if N < 3:
        raise ValidationError(f"A circle needs at least 3 elements, got {N}")
    return BoundaryMesh.from_loops([circle_vertices(center, radius, N, clockwise)], validate=False)


def insert_disk(mesh: BoundaryMesh, x, eps: float, n_elements: int,
                remove: bool = False) -> BoundaryMesh:
    """
    Add a small disk B_eps(x) to the scatterer, or carve it out.

    Exterior points get a counterclockwise material loop; interior points
    (``remove=True``) get a clockwise hole.
    """
    clearance = float(mesh.distance(np.asarray(x, float)[None, :])[0])
    if clearance <= eps:
        raise ValidationError(
            f"Disk of radius {eps} at {list(x)} touches the boundary (clearance {clearance:.3g})"
        )
    disk = discretize_circle(x, eps, n_elements, clockwise=remove)
    return mesh.union(disk)


# ---------------------------------------------------------------------------
# Marching squares
# ---------------------------------------------------------------------------

# Edges of cell (i, j): bottom, right, top, left, as (kind, di, dj)
_CELL_EDGES = (("h", 0, 0), ("v", 1, 0), ("h", 0, 1), ("v", 0, 0))


def _edge_point(key, xs, ys, values) -> np.ndarray:
    kind, i, j = key
    if kind == "h":
        a, b = values[i, j], values[i + 1, j]
        t = a / (a - b)
        return np.array([xs[i] + t * (xs[i + 1] - xs[i]), ys[j]])
    a, b = values[i, j], values[i, j + 1]
    t = a / (a - b)
    return np.array([xs[i], ys[j] + t * (ys[j + 1] - ys[j])])


def _cell_segments(i: int, j: int, values: np.ndarray):
    """Edge pairs joined inside cell (i, j), plus the corner values."""
    corners = (values[i, j], values[i + 1, j], values[i + 1, j + 1], values[i, j + 1])
    inside = [c < 0 for c in corners]
    edges = [(kind, i + di, j + dj) for kind, di, dj in _CELL_EDGES]
    crossing = [e for n, e in enumerate(edges) if inside[n] != inside[(n + 1) % 4]]

    if len(crossing) == 2:
        return [(crossing[0], crossing[1])], corners

    # Saddle: the cell-center average decides which diagonal is connected
    if (np.mean(corners) < 0) == inside[0]:
        return [(edges[0], edges[1]), (edges[2], edges[3])], corners
    return [(edges[3], edges[0]), (edges[1], edges[2])], corners


def _orient(p: np.ndarray, q: np.ndarray, cell_origin, cell_size, corners) -> bool:
    """True if p->q already has phi < 0 on its left."""
    a0, a1, a2, a3 = corners
    mid = 0.5 * (p + q)
    u = (mid[0] - cell_origin[0]) / cell_size[0]
    v = (mid[1] - cell_origin[1]) / cell_size[1]
    du = ((1 - v) * (a1 - a0) + v * (a2 - a3)) / cell_size[0]
    dv = ((1 - u) * (a3 - a0) + u * (a2 - a1)) / cell_size[1]
    d = q - p
    left = np.array([-d[1], d[0]])
    return du * left[0] + dv * left[1] < 0


def _trace_loops(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> List[np.ndarray]:
    inside = values < 0
    corner_sum = (
        inside[:-1, :-1].astype(int) + inside[1:, :-1] + inside[1:, 1:] + inside[:-1, 1:]
    )
    active = np.argwhere((corner_sum > 0) & (corner_sum < 4))

    points: Dict[tuple, np.ndarray] = {}
    successor: Dict[tuple, tuple] = {}

    def point(key):
        if key not in points:
            points[key] = _edge_point(key, xs, ys, values)
        return points[key]

    for i, j in active:
        origin = (xs[i], ys[j])
        size = (xs[i + 1] - xs[i], ys[j + 1] - ys[j])
        pairs, corners = _cell_segments(int(i), int(j), values)
        for e_a, e_b in pairs:
            if not _orient(point(e_a), point(e_b), origin, size, corners):
                e_a, e_b = e_b, e_a
            successor[e_a] = e_b

    loops = []
    visited = set()
    for start in successor:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        current = successor[start]
        while current != start:
            if current in visited or current not in successor:
                raise EmptyShapeError("Contour tracing produced an open chain")
            chain.append(current)
            visited.add(current)
            current = successor[current]
        loops.append(np.array([points[key] for key in chain]))
    return loops


def _resample(loop: np.ndarray, target_h: float) -> np.ndarray:
    closed = np.vstack([loop, loop[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    perimeter = arc[-1]
    n = max(int(round(perimeter / target_h)), 3)
    s = np.arange(n) * perimeter / n
    return np.column_stack([np.interp(s, arc, closed[:, 0]), np.interp(s, arc, closed[:, 1])])


def extract_contour(field: LevelSetField, cells: int, target_h: float) -> BoundaryMesh:
    """
    Zero contour of a level-set field as a boundary mesh.

    Args:
        field: level-set field (material where phi < 0)
        cells: sampling cells per axis for marching squares
        target_h: desired element length after resampling

    Returns:
        BoundaryMesh whose loops keep the material on their left

    Raises:
        EmptyShapeError: no material or only sub-resolution islands
        BoundaryClipError: the material touches the design-domain boundary
    """
    xs = np.linspace(field.x_lo, field.x_hi, cells + 1)
    values = levelset_grid(field, xs, xs)

    rim = np.concatenate([values[0, :], values[-1, :], values[:, 0], values[:, -1]])
    if np.any(rim < 0):
        raise BoundaryClipError("Zero level set touches the design-domain boundary")
    if not np.any(values < 0):
        raise EmptyShapeError("Level-set field has no material region")

    loops = []
    for loop in _trace_loops(values, xs, xs):
        resampled = _resample(loop, target_h)
        if len(resampled) < MIN_LOOP_ELEMENTS:
            logger.warning(f"Dropping island with {len(resampled)} elements")
            continue
        loops.append(resampled)

    if not loops:
        raise EmptyShapeError("All contour loops fell below the minimum element count")

    mesh = BoundaryMesh.from_loops(loops)
    logger.debug(f"Extracted {len(loops)} loop(s), {mesh.n_elements} elements")
    return mesh
