"""
Tests for the command-line front end.
"""

import json

import pytest

from bicwave import __version__
from bicwave.cli import cli

MEDIA = {"rho": 1.0, "kappa": 1.0, "rho_hat": 2.0, "kappa_hat": 1.0}


def _eig_beta_payload(**overrides):
    payload = {
        "command": "eig-beta",
        "geometry": {"kind": "circle", "radius": 0.3, "solver": "analytic"},
        "media": MEDIA,
        "lattice": {"L": 1.0, "n_tr": 8},
        "omega": 6.2831,
        "contour": {"center": 0.5, "radius": 0.4},
    }
    payload.update(overrides)
    return payload


def _invoke(runner, command, config, out):
    return runner.invoke(cli, ["--env", "testing", command, "--config", config, "--out", str(out),
                               "--workers", "2"])


def _read_json(path):
    return json.loads(path.read_text())


@pytest.mark.unit
class TestCliBasics:
    """Test cases for the command group."""

    def test_version(self, runner):
        """Test the version option."""
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_recipes(self, runner):
        """Test that bundled recipes are listed."""
        result = runner.invoke(cli, ["--env", "testing", "recipes"])
        assert result.exit_code == 0
        assert "verify_circle" in result.output.split()

    def test_config_is_required(self, runner):
        """Test the usage error without --config."""
        result = runner.invoke(cli, ["--env", "testing", "eig-beta"])
        assert result.exit_code != 0


@pytest.mark.integration
class TestCliErrors:
    """Test cases for error reporting and exit codes."""

    def test_overlapping_cells(self, runner, write_config, tmp_path):
        """Test that 2r >= L exits 2 with a WELL_SEPARATION error."""
        geometry = {"kind": "circle", "radius": 0.5, "solver": "analytic"}
        config = write_config(_eig_beta_payload(geometry=geometry))
        out = tmp_path / "out"
        result = _invoke(runner, "eig-beta", config, out)
        assert result.exit_code == 2
        assert _read_json(out / "error.json")["error"]["code"] == "WELL_SEPARATION"
        assert _read_json(out / "metadata.json")["status"] == "error"

    def test_unknown_key(self, runner, write_config, tmp_path):
        """Test that unknown keys are rejected."""
        config = write_config(_eig_beta_payload(colour="blue"))
        out = tmp_path / "out"
        result = _invoke(runner, "eig-beta", config, out)
        assert result.exit_code == 2
        body = _read_json(out / "error.json")["error"]
        assert body["code"] == "CONFIG_ERROR"
        assert "colour" in body["details"]["errors"]

    def test_command_mismatch(self, runner, write_config, tmp_path):
        """Test that a config for another command is refused."""
        config = write_config(_eig_beta_payload(command="band"))
        result = _invoke(runner, "eig-beta", config, tmp_path / "out")
        assert result.exit_code == 2

    def test_missing_section(self, runner, write_config, tmp_path):
        """Test that the contour section is required for eig-beta."""
        payload = _eig_beta_payload()
        del payload["contour"]
        out = tmp_path / "out"
        result = _invoke(runner, "eig-beta", write_config(payload), out)
        assert result.exit_code == 2
        assert "contour" in _read_json(out / "error.json")["error"]["details"]["errors"]

    def test_unknown_config_source(self, runner, tmp_path):
        """Test that a missing file that is not a recipe exits 2."""
        result = _invoke(runner, "eig-beta", str(tmp_path / "nope.json"), tmp_path / "out")
        assert result.exit_code == 2

    def test_contour_on_branch_cut(self, runner, write_config, tmp_path):
        """Test that a contour crossing a cut exits 2."""
        config = write_config(_eig_beta_payload(omega=3.0, contour={"center": 3.0, "radius": 0.2}))
        out = tmp_path / "out"
        result = _invoke(runner, "eig-beta", config, out)
        assert result.exit_code == 2
        assert _read_json(out / "error.json")["error"]["details"]["crossings"]


@pytest.mark.integration
class TestCliRuns:
    """Test cases for successful runs."""

    def test_eig_beta(self, runner, write_config, tmp_path):
        """Test an analytic eigenvalue run and its outputs."""
        out = tmp_path / "out"
        result = _invoke(runner, "eig-beta", write_config(_eig_beta_payload()), out)
        assert result.exit_code == 0, result.output
        metadata = _read_json(out / "metadata.json")
        assert metadata["status"] == "ok"
        assert metadata["summary"]["modes"] == 1
        assert metadata["config"]["lattice"]["n_tr"] == 8
        assert metadata["versions"]["bicwave"] == __version__
        lines = (out / "eigenvalues.csv").read_text().strip().splitlines()
        assert len(lines) == 2

    def test_band_without_modes(self, runner, write_config, tmp_path):
        """Test that a sweep with no modes still writes header-only tables."""
        payload = {
            "command": "band",
            "geometry": {"kind": "circle", "radius": 0.3, "solver": "analytic"},
            "media": {"rho_hat": 1.0, "kappa_hat": 1.0},
            "lattice": {"L": 1.0, "n_tr": 4},
            "sweep": {"omega_min": 3.0, "omega_max": 3.0, "points": 1},
        }
        out = tmp_path / "out"
        result = _invoke(runner, "band", write_config(payload), out)
        assert result.exit_code == 0, result.output
        assert len((out / "band.csv").read_text().strip().splitlines()) == 1
        assert len((out / "lightlines.csv").read_text().strip().splitlines()) == 11
        assert _read_json(out / "metadata.json")["failures"] == []

    def test_smat(self, runner, write_config, tmp_path):
        """Test a single-scatterer run with defects in the summary."""
        payload = {
            "command": "smat",
            "geometry": {"kind": "circle", "radius": 0.3, "solver": "analytic"},
            "media": MEDIA,
            "lattice": {"L": 1.0, "n_tr": 6},
            "omega": 6.2831,
        }
        out = tmp_path / "out"
        result = _invoke(runner, "smat", write_config(payload), out)
        assert result.exit_code == 0, result.output
        summary = _read_json(out / "metadata.json")["summary"]
        assert summary["unitarity_defect"] < 1e-12
        assert (out / "smat.csv").is_file()
