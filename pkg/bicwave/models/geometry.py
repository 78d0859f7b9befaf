"""
Geometry models: boundary meshes, analytic circles and level-set fields.
"""

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np

from bicwave.core.errors import AssemblyError, ValidationError

# Rows per block when doing all-pairs element work
_PAIR_CHUNK = 256


def _frozen(array, dtype=float) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.flags.writeable = False
    return out


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


# =====================================================
# Boundary mesh
# =====================================================


@dataclass(frozen=True)
class BoundaryMesh:
    """
    Closed polygonal boundary made of straight constant elements.

    Element i runs from ``starts[i]`` to ``ends[i]``. Loops are contiguous
    runs of elements delimited by ``loop_offsets``; each loop keeps the
    scatterer material on its left, so ``normals`` point into the exterior.
    """

    starts: np.ndarray
    ends: np.ndarray
    loop_offsets: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "starts", _frozen(self.starts))
        object.__setattr__(self, "ends", _frozen(self.ends))
        object.__setattr__(self, "loop_offsets", tuple(int(o) for o in self.loop_offsets))

    # -----------------------------------------------------
    # Construction
    # -----------------------------------------------------

    @classmethod
    def from_loops(cls, loops: Sequence[np.ndarray], validate: bool = True) -> "BoundaryMesh":
        """
        Build a mesh from closed vertex loops (last vertex not repeated).

        Args:
            loops: list of (n_i, 2) vertex arrays, material on the left
            validate: run the zero-length and self-intersection checks

        Returns:
            BoundaryMesh
        """
        starts, ends, offsets = [], [], [0]
        for loop in loops:
            vertices = np.asarray(loop, dtype=float)
            if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
                raise ValidationError("Each loop needs at least three 2-D vertices")
            starts.append(vertices)
            ends.append(np.roll(vertices, -1, axis=0))
            offsets.append(offsets[-1] + len(vertices))
        if not starts:
            raise ValidationError("A boundary mesh needs at least one loop")
        mesh = cls(np.vstack(starts), np.vstack(ends), tuple(offsets))
        if validate:
            mesh.validate()
        return mesh

    def union(self, other: "BoundaryMesh") -> "BoundaryMesh":
        """Concatenate the loops of two meshes (caller ensures they are disjoint)."""
        offsets = self.loop_offsets + tuple(o + self.n_elements for o in other.loop_offsets[1:])
        return BoundaryMesh(
            np.vstack([self.starts, other.starts]),
            np.vstack([self.ends, other.ends]),
            offsets,
        )

    # -----------------------------------------------------
    # Element data
    # -----------------------------------------------------

    @property
    def n_elements(self) -> int:
        return self.starts.shape[0]

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.starts + self.ends)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.ends - self.starts, axis=1)

    @cached_property
    def tangents(self) -> np.ndarray:
        return (self.ends - self.starts) / self.lengths[:, None]

    @cached_property
    def normals(self) -> np.ndarray:
        t = self.tangents
        return np.column_stack([t[:, 1], -t[:, 0]])

    @property
    def loops(self) -> List[slice]:
        return [slice(a, b) for a, b in zip(self.loop_offsets[:-1], self.loop_offsets[1:])]

    @property
    def perimeter(self) -> float:
        return float(self.lengths.sum())

    @property
    def mean_element_length(self) -> float:
        return float(self.lengths.mean())

    def signed_areas(self) -> np.ndarray:
        """Shoelace area per loop; positive for counterclockwise loops."""
        cross = _cross(self.starts, self.ends)
        return np.array([0.5 * cross[s].sum() for s in self.loops])

    @property
    def area(self) -> float:
        """Material area (holes are clockwise and subtract)."""
        return float(self.signed_areas().sum())

    @cached_property
    def geometry_hash(self) -> str:
        digest = hashlib.sha1()
        digest.update(np.ascontiguousarray(self.starts).tobytes())
        digest.update(np.asarray(self.loop_offsets, dtype=np.int64).tobytes())
        return digest.hexdigest()

    def enclosing_radius(self, x0) -> float:
        """Radius of the smallest disk around x0 containing every node."""
        return float(np.max(np.linalg.norm(self.starts - np.asarray(x0, float), axis=1)))

    # -----------------------------------------------------
    # Point queries
    # -----------------------------------------------------

    def distance(self, points) -> np.ndarray:
        """Euclidean distance from each point to the nearest element."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        seg = self.ends - self.starts
        seg_len2 = np.einsum("ij,ij->i", seg, seg)
        out = np.empty(len(pts))
        for lo in range(0, len(pts), _PAIR_CHUNK):
            block = pts[lo:lo + _PAIR_CHUNK]
            rel = block[:, None, :] - self.starts[None, :, :]
            s = np.clip(np.einsum("mij,ij->mi", rel, seg) / seg_len2, 0.0, 1.0)
            closest = self.starts[None] + s[..., None] * seg[None]
            out[lo:lo + _PAIR_CHUNK] = np.min(
                np.linalg.norm(block[:, None, :] - closest, axis=2), axis=1
            )
        return out

    def contains(self, points) -> np.ndarray:
        """Even-odd ray casting; True inside the material (holes excluded)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        a, b = self.starts, self.ends
        inside = np.zeros(len(pts), dtype=bool)
        for lo in range(0, len(pts), _PAIR_CHUNK):
            x = pts[lo:lo + _PAIR_CHUNK, 0][:, None]
            y = pts[lo:lo + _PAIR_CHUNK, 1][:, None]
            straddle = (a[None, :, 1] > y) != (b[None, :, 1] > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_cross = a[None, :, 0] + (y - a[None, :, 1]) * (
                    (b[None, :, 0] - a[None, :, 0]) / (b[None, :, 1] - a[None, :, 1])
                )
            hits = straddle & (x < x_cross)
            inside[lo:lo + _PAIR_CHUNK] = (np.count_nonzero(hits, axis=1) % 2) == 1
        return inside

    # -----------------------------------------------------
    # Validation
    # -----------------------------------------------------

    def validate(self) -> None:
        """
        Check element lengths and pairwise self-intersections per loop.

        Raises:
            AssemblyError: on zero-length elements or crossing segments
        """
        scale = max(float(np.ptp(self.starts, axis=0).max()), 1.0)
        degenerate = np.flatnonzero(self.lengths <= 1e-14 * scale)
        if degenerate.size:
            raise AssemblyError(
                f"{degenerate.size} zero-length element(s) in boundary mesh",
                {"elements": degenerate[:20].tolist()},
            )

        for loop_index, loop in enumerate(self.loops):
            p, q = self.starts[loop], self.ends[loop]
            n = len(p)
            idx = np.arange(n)
            for lo in range(0, n, _PAIR_CHUNK):
                rows = idx[lo:lo + _PAIR_CHUNK]
                pa, pb = p[rows][:, None, :], q[rows][:, None, :]
                qa, qb = p[None, :, :], q[None, :, :]
                d1 = _cross(qb - qa, pa - qa)
                d2 = _cross(qb - qa, pb - qa)
                d3 = _cross(pb - pa, qa - pa)
                d4 = _cross(pb - pa, qb - pa)
                crossing = (d1 * d2 < 0) & (d3 * d4 < 0)
                gap = np.abs(rows[:, None] - idx[None, :])
                crossing &= (gap > 1) & (gap < n - 1)
                if np.any(crossing):
                    i, j = np.argwhere(crossing)[0]
                    raise AssemblyError(
                        f"Loop {loop_index} self-intersects between elements "
                        f"{rows[i]} and {j}",
                        {"loop": loop_index},
                    )

    def to_dict(self) -> dict:
        return {
            "n_elements": self.n_elements,
            "loops": len(self.loops),
            "perimeter": self.perimeter,
            "geometry_hash": self.geometry_hash,
        }


# =====================================================
# Analytic circle
# =====================================================


@dataclass(frozen=True)
class CircleShape:
    """A centered circular scatterer solved by partial waves instead of BEM."""

    radius: float
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"Circle radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def geometry_hash(self) -> str:
        return hashlib.sha1(
            f"circle:{self.radius!r}:{self.center!r}".encode()
        ).hexdigest()

    def enclosing_radius(self, x0) -> float:
        return float(np.hypot(*(np.asarray(self.center) - np.asarray(x0, float)))) + self.radius

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.hypot(*(pts - np.asarray(self.center)).T) < self.radius

    def distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.abs(np.hypot(*(pts - np.asarray(self.center)).T) - self.radius)


# =====================================================
# Level-set field
# =====================================================


@dataclass(frozen=True)
class LevelSetField:
    """
    Tensor-product B-spline level-set function over [x_lo, x_hi]^2.

    ``coeffs[i, j]`` multiplies B_i(x1) B_j(x2). Material is where phi < 0.
    """

    coeffs: np.ndarray
    x_lo: float = -0.354
    x_hi: float = 0.354
    degree: int = 3

    def __post_init__(self):
        coeffs = _frozen(self.coeffs)
        if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
            raise ValidationError(f"Level-set coefficients must be square, got {coeffs.shape}")
        if self.degree < 3:
            raise ValidationError("Level-set splines must be at least cubic")
        if coeffs.shape[0] <= self.degree:
            raise ValidationError(
                f"Grid {coeffs.shape[0]} too small for degree {self.degree}"
            )
        if not self.x_hi > self.x_lo:
            raise ValidationError("Design domain needs x_hi > x_lo")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def grid(self) -> int:
        return self.coeffs.shape[0]

    @cached_property
    def knots(self) -> np.ndarray:
        """Clamped uniform knot vector shared by both axes."""
        p = self.degree
        breaks = np.linspace(self.x_lo, self.x_hi, self.grid - p + 1)
        return np.concatenate([np.full(p, self.x_lo), breaks, np.full(p, self.x_hi)])

    @cached_property
    def greville(self) -> np.ndarray:
        """Greville abscissae; sampling a function here gives a shape-preserving fit."""
        p, t = self.degree, self.knots
        return np.array([t[i + 1:i + p + 1].mean() for i in range(self.grid)])

    def space_key(self) -> Tuple[int, float, float, int]:
        return (self.grid, float(self.x_lo), float(self.x_hi), self.degree)

    def same_space(self, other: "LevelSetField") -> bool:
        return self.space_key() == other.space_key()

    def with_coeffs(self, coeffs) -> "LevelSetField":
        return LevelSetField(coeffs, self.x_lo, self.x_hi, self.degree)

    def _check_space(self, other: "LevelSetField") -> None:
        if not self.same_space(other):
            raise ValidationError(
                "Level-set fields live on different spline grids",
                {"left": self.space_key(), "right": other.space_key()},
            )

    def __add__(self, other: "LevelSetField") -> "LevelSetField":
        self._check_space(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "LevelSetField") -> "LevelSetField":
        self._check_space(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scale: float) -> "LevelSetField":
        return self.with_coeffs(float(scale) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "LevelSetField":
        return self.with_coeffs(-self.coeffs)
