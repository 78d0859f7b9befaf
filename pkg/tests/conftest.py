"""
Test configuration and fixtures.
"""

import os

os.environ.setdefault("APP_ENV", "testing")

import pytest  # noqa: E402
from click.testing import CliRunner  # noqa: E402

from bicwave import create_runtime  # noqa: E402
from bicwave.core.cache import scattering_cache  # noqa: E402
from bicwave.models.geometry import CircleShape  # noqa: E402
from bicwave.models.medium import Medium  # noqa: E402
from bicwave.models.modes import PeriodicConfig  # noqa: E402
from bicwave.services.mesh import discretize_circle  # noqa: E402


@pytest.fixture(autouse=True)
def clear_cache():
    """Start every test with an empty scattering-matrix cache."""
    scattering_cache.clear()
    yield
    scattering_cache.clear()


@pytest.fixture
def runtime():
    """A runtime built from the testing configuration."""
    return create_runtime("testing")


@pytest.fixture
def exterior():
    """Background medium (rho = kappa = 1)."""
    return Medium(1.0, 1.0)


@pytest.fixture
def interior():
    """Denser scatterer material (rho = 2, kappa = 1)."""
    return Medium(2.0, 1.0)


@pytest.fixture
def circle_shape():
    """Analytic circle of radius 0.3 at the origin."""
    return CircleShape(0.3)


@pytest.fixture
def circle_mesh():
    """A 200-element polygon inscribed in the radius-0.3 circle."""
    return discretize_circle((0.0, 0.0), 0.3, 200)


@pytest.fixture
def analytic_config(exterior, interior, circle_shape):
    """Unit-period waveguide of analytic circles, truncated at n_tr = 8."""
    return PeriodicConfig(
        L=1.0,
        exterior=exterior,
        interior=interior,
        shape=circle_shape,
        n_tr=8,
        solver="analytic",
    )


@pytest.fixture
def bem_config(exterior, interior, circle_mesh):
    """The same waveguide with a BEM-discretized circle."""
    return PeriodicConfig(
        L=1.0,
        exterior=exterior,
        interior=interior,
        shape=circle_mesh,
        n_tr=8,
        solver="bem",
    )


@pytest.fixture
def runner():
    """A test runner for the bicwave Click commands."""
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    """Write a run-config dict to a JSON file and return its path."""
    import json

    def _write(payload, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    return _write
