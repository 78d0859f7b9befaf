"""
Tests for geometry files and result tables.
"""

import numpy as np
import pytest

from bicwave.core.errors import ValidationError
from bicwave.models.geometry import LevelSetField
from bicwave.services import io
from bicwave.services.mesh import discretize_circle, insert_disk


@pytest.mark.unit
class TestGeometryFiles:
    """Test cases for polyline and level-set files."""

    def test_polyline_keeps_loops(self, tmp_path):
        """Test that a two-loop mesh is read back loop by loop."""
        mesh = insert_disk(discretize_circle((0.0, 0.0), 0.3, 40), (0.0, 0.0), 0.05, 12, remove=True)
        path = io.write_polyline(tmp_path / "shape.csv", mesh)
        loaded = io.read_polyline(path)
        assert loaded.loop_offsets == mesh.loop_offsets
        assert np.array_equal(loaded.starts, mesh.starts)

    def test_polyline_header_and_spaces(self, tmp_path):
        """Test that a header row and whitespace separators are accepted."""
        path = tmp_path / "square.txt"
        path.write_text("x1,x2\n0 0\n1 0\n1 1\n0 1\n")
        mesh = io.read_polyline(path)
        assert mesh.n_elements == 4
        assert mesh.area == pytest.approx(1.0)

    def test_polyline_malformed_row(self, tmp_path):
        """Test that rows without two coordinates are rejected."""
        path = tmp_path / "bad.csv"
        path.write_text("0,0\n1,0,3\n1,1\n")
        with pytest.raises(ValidationError):
            io.read_polyline(path)

    def test_polyline_short_loop(self, tmp_path):
        """Test that a two-vertex loop is rejected."""
        path = tmp_path / "short.csv"
        path.write_text("0,0\n1,0\n")
        with pytest.raises(ValidationError):
            io.read_polyline(path)

    def test_levelset_file(self, tmp_path):
        """Test that coefficients and the domain survive a write and read."""
        coeffs = np.arange(100, dtype=float).reshape(10, 10) / 7.0
        field = LevelSetField(coeffs, -0.354, 0.354, 3)
        loaded = io.read_levelset(io.write_levelset(tmp_path / "phi.txt", field))
        assert np.array_equal(loaded.coeffs, field.coeffs)
        assert loaded.space_key() == field.space_key()

    def test_levelset_wrong_count(self, tmp_path):
        """Test that a coefficient count mismatch is rejected."""
        path = tmp_path / "phi.txt"
        path.write_text("4 4 3 -0.354 0.354\n1 2 3\n")
        with pytest.raises(ValidationError):
            io.read_levelset(path)


@pytest.mark.unit
class TestResultTables:
    """Test cases for CSV and JSON outputs."""

    def test_float_format_is_exact(self):
        """Test that floats are written with 17 significant digits."""
        value = 0.1 + 0.2
        assert float(io.fmt(value)) == value
        assert io.fmt(True) == "true"
        assert io.fmt(np.int64(3)) == "3"

    def test_header_only_table(self, tmp_path):
        """Test that an empty table still has its header."""
        path = io.write_band(tmp_path / "band.csv", [])
        assert path.read_text().strip() == "omega,re_beta,im_beta,residual,classification"
        assert io.read_table(path) == []

    def test_json_handles_numpy_and_complex(self, tmp_path):
        """Test JSON serialization of numpy and complex values."""
        path = io.write_json(tmp_path / "meta.json", {
            "z": 1 + 2j,
            "arr": np.arange(3),
            "x": np.float64(0.5),
        })
        text = path.read_text()
        assert '"z": [\n    1.0,\n    2.0\n  ]' in text
        assert '"x": 0.5' in text
