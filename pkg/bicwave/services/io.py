"""
Readers and writers for geometry files and result tables.

Every float is written with 17 significant digits so tables round-trip
exactly.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np

from bicwave.core.errors import ValidationError
from bicwave.models.geometry import BoundaryMesh, LevelSetField
from bicwave.models.scattering import ScatteringMatrix

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def fmt(value) -> str:
    """17-significant-digit text for floats, plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_table(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """CSV with a header row; an empty ``rows`` gives a header-only file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        count = 0
        for row in rows:
            writer.writerow([fmt(v) for v in row])
            count += 1
    logger.debug(f"Wrote {count} row(s) to {path}")
    return path


def read_table(path: PathLike) -> List[Dict[str, str]]:
    with Path(path).open(newline="") as handle:
        return list(csv.DictReader(handle))


# ---------------------------------------------------------------------------
# Geometry files
# ---------------------------------------------------------------------------


def write_polyline(path: PathLike, mesh: BoundaryMesh) -> Path:
    """One block of x1,x2 rows per loop, blocks separated by blank lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        for index, loop in enumerate(mesh.loops):
            if index:
                handle.write("\n")
            for x1, x2 in mesh.starts[loop]:
                handle.write(f"{fmt(x1)},{fmt(x2)}\n")
    return path


def read_polyline(path: PathLike, validate: bool = True) -> BoundaryMesh:
    """
    Read a boundary polyline file.

    Raises:
        ValidationError: malformed rows or loops with fewer than 3 vertices
    """
    loops: List[List[List[float]]] = [[]]
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.strip()
        if not text:
            if loops[-1]:
                loops.append([])
            continue
        if text.lower().startswith("x1"):
            continue
        parts = text.replace(",", " ").split()
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected two coordinates, got '{text}'")
        try:
            loops[-1].append([float(parts[0]), float(parts[1])])
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    loops = [loop for loop in loops if loop]
    if not loops or any(len(loop) < 3 for loop in loops):
        raise ValidationError(f"{path}: every loop needs at least 3 vertices")
    return BoundaryMesh.from_loops([np.asarray(loop) for loop in loops], validate=validate)


def write_levelset(path: PathLike, field: LevelSetField) -> Path:
    """Header "rows cols degree x_lo x_hi", then row-major coefficients."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows, cols = field.coeffs.shape
    lines = [f"{rows} {cols} {field.degree} {fmt(field.x_lo)} {fmt(field.x_hi)}"]
    lines.extend(" ".join(fmt(v) for v in row) for row in field.coeffs)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_levelset(path: PathLike) -> LevelSetField:
    tokens = Path(path).read_text().split()
    if len(tokens) < 5:
        raise ValidationError(f"{path}: missing level-set header")
    try:
        rows, cols, degree = int(tokens[0]), int(tokens[1]), int(tokens[2])
        x_lo, x_hi = float(tokens[3]), float(tokens[4])
        values = np.array([float(t) for t in tokens[5:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    if values.size != rows * cols:
        raise ValidationError(f"{path}: expected {rows * cols} coefficients, found {values.size}")
    return LevelSetField(values.reshape(rows, cols), x_lo, x_hi, degree)


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------


def write_smat(path: PathLike, smat: ScatteringMatrix) -> Path:
    """Header "n_tr omega_re omega_im", then rows n, n', Re S, Im S."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_tr = smat.n_tr
    with path.open("w", newline="") as handle:
        handle.write(f"{n_tr} {fmt(smat.omega.real)} {fmt(smat.omega.imag)}\n")
        for i, n in enumerate(smat.orders):
            for j, m in enumerate(smat.orders):
                value = smat.entries[i, j]
                handle.write(f"{n},{m},{fmt(value.real)},{fmt(value.imag)}\n")
    return path


def read_smat(path: PathLike):
    """(n_tr, omega, entries) from a scattering-matrix dump."""
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    n_tr = int(head[0])
    omega = complex(float(head[1]), float(head[2]))
    entries = np.zeros((2 * n_tr + 1, 2 * n_tr + 1), dtype=complex)
    for line in lines[1:]:
        if not line.strip():
            continue
        n, m, re, im = line.split(",")
        entries[int(n) + n_tr, int(m) + n_tr] = complex(float(re), float(im))
    return n_tr, omega, entries


def write_band(path: PathLike, modes) -> Path:
    return write_table(
        path, ["omega", "re_beta", "im_beta", "residual", "classification"],
        ([m.omega.real, m.beta.real, m.beta.imag, m.residual, m.classification.value] for m in modes),
    )


def write_modes(path: PathLike, modes) -> Path:
    """Eigenpairs with complex omega and beta."""
    return write_table(
        path, ["re_omega", "im_omega", "re_beta", "im_beta", "residual", "classification",
               "refinement"],
        ([m.omega.real, m.omega.imag, m.beta.real, m.beta.imag, m.residual,
          m.classification.value, m.refinement] for m in modes),
    )


def write_lightlines(path: PathLike, rows: Iterable[Dict]) -> Path:
    return write_table(path, ["omega", "beta", "n", "sign"],
                       ([r["omega"], r["beta"], r["n"], r["sign"]] for r in rows))


def write_spectrum(path: PathLike, rows: Iterable) -> Path:
    return write_table(path, ["omega", "transmittance"], rows)


def write_field(path: PathLike, points: np.ndarray, values: np.ndarray) -> Path:
    return write_table(
        path, ["x1", "x2", "re_u", "im_u", "abs_u"],
        ([p[0], p[1], v.real, v.imag, abs(v)] for p, v in zip(points, values)),
    )


def write_td_field(path: PathLike, gradient) -> Path:
    dtj = gradient.dt_objective
    return write_table(
        path, ["x1", "x2", "side", "re_dtbeta", "im_dtbeta", "dtJ"],
        ([p[0], p[1], s, v.real, v.imag, j]
         for p, s, v, j in zip(gradient.points, gradient.sides, gradient.samples, dtj)),
    )


def write_history(path: PathLike, history) -> Path:
    return write_table(
        path, ["iteration", "J", "re_beta", "im_beta", "delta", "accepted"],
        ([e.iteration, e.J, complex(e.beta).real, complex(e.beta).imag, e.delta, e.accepted]
         for e in history),
    )


def write_json(path: PathLike, payload: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")
    return path


def _json_default(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.complexfloating):
        return [float(value.real), float(value.imag)]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return str(value)
