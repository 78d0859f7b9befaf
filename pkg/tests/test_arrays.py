"""
Tests for finite arrays: multiple scattering, fields, flux and spectra.
"""

import numpy as np
import pytest

from bicwave.core.errors import WellSeparationError
from bicwave.models.geometry import CircleShape
from bicwave.models.modes import ArrayConfig
from bicwave.services import arrays, smat
from bicwave.services.incident import PlaneWave, PointSource

OMEGA = 2.0 * np.pi
GAMMA_IN = ((-1.0, -1.0), (-1.0, 1.0))
GAMMA_OUT = ((3.0, -1.0), (3.0, 1.0))


@pytest.fixture
def circle_smat(exterior, interior):
    """Analytic matrix of the radius-0.3 circle at 2 pi, n_tr = 10."""
    return smat.mie_scattering_matrix(0.3, exterior, interior, OMEGA, 10)


@pytest.fixture
def pair(circle_smat):
    """Two circles one period apart under a plane wave along x."""
    arr = ArrayConfig.from_template(circle_smat, [(0.0, 0.0), (1.0, 0.0)], PlaneWave())
    return arr, arrays.finite_array_solve(arr, OMEGA)


@pytest.mark.unit
class TestArraySolve:
    """Test cases for the multiple-scattering system."""

    def test_empty_array(self, exterior):
        """Test that no scatterers give no outgoing coefficients."""
        solution = arrays.finite_array_solve(ArrayConfig((), PlaneWave()), OMEGA, exterior)
        assert len(solution) == 0
        assert solution.k == pytest.approx(OMEGA)

    def test_single_scatterer(self, circle_smat):
        """Test that an isolated scatterer gives B = S alpha."""
        incident = PlaneWave((np.cos(0.3), np.sin(0.3)))
        arr = ArrayConfig.from_template(circle_smat, [(0.0, 0.0)], incident)
        solution = arrays.finite_array_solve(arr, OMEGA)
        alpha = incident.coefficients((0.0, 0.0), circle_smat.k, 10).coeffs
        assert np.allclose(solution[0].coeffs, circle_smat.entries @ alpha)

    def test_overlapping_scatterers(self, circle_smat):
        """Test that intersecting enclosing disks are rejected."""
        with pytest.raises(WellSeparationError):
            ArrayConfig.from_template(circle_smat, [(0.0, 0.0), (0.5, 0.0)])

    def test_symmetric_pair(self, circle_smat):
        """Test mirror symmetry of two scatterers under a wave along y."""
        arr = ArrayConfig.from_template(circle_smat, [(-0.5, 0.0), (0.5, 0.0)], PlaneWave((0.0, 1.0)))
        solution = arrays.finite_array_solve(arr, OMEGA)
        u_left, _ = arrays.array_field(arr, solution, [-0.2, 0.8])
        u_right, _ = arrays.array_field(arr, solution, [0.2, 0.8])
        assert u_left == pytest.approx(u_right, rel=1e-8)


@pytest.mark.service
class TestArrayField:
    """Test cases for total fields and energy flux."""

    def test_continuity_at_enclosing_circle(self, pair):
        """Test that the stored interior fields match the multipole series."""
        arr, solution = pair
        direction = np.array([np.cos(2.0), np.sin(2.0)])
        inner, _ = arrays.array_field(arr, solution, (0.3 - 1e-9) * direction)
        outer, _ = arrays.array_field(arr, solution, (0.3 + 1e-9) * direction)
        assert inner == pytest.approx(outer, abs=1e-6)

    def test_lossless_net_flux_vanishes(self, pair):
        """Test energy conservation through a circle around both scatterers."""
        arr, solution = pair
        net = arrays.flux_through_circle(arr, solution, (0.5, 0.0), 2.0, 256, OMEGA, 1.0)
        assert abs(net) < 1e-6

    def test_plane_wave_flux(self, exterior):
        """Test the power of a unit plane wave through a line of length 2."""
        arr = ArrayConfig((), PlaneWave())
        solution = arrays.finite_array_solve(arr, OMEGA, exterior)
        power = arrays.flux_through_segment(arr, solution, GAMMA_IN, 16, OMEGA, 1.0)
        # k |u|^2 * length / (2 omega rho) with k = omega
        assert power == pytest.approx(1.0, rel=1e-12)

    def test_flux_sign_follows_segment_orientation(self, exterior):
        """Test that reversing the segment flips the power."""
        arr = ArrayConfig((), PlaneWave())
        solution = arrays.finite_array_solve(arr, OMEGA, exterior)
        forward = arrays.flux_through_segment(arr, solution, GAMMA_IN, 16, OMEGA, 1.0)
        backward = arrays.flux_through_segment(arr, solution, GAMMA_IN[::-1], 16, OMEGA, 1.0)
        assert backward == pytest.approx(-forward)


@pytest.mark.service
class TestTransmittance:
    """Test cases for transmittance spectra."""

    def test_empty_array_transmits_everything(self, exterior, interior):
        """Test T = 1 without scatterers."""
        template = arrays.ArrayTemplate(CircleShape(0.3), exterior, interior, (), 6)
        result = arrays.transmittance_spectrum(template, [3.0, 5.0], GAMMA_IN, GAMMA_OUT)
        assert [omega for omega, _ in result.rows] == [3.0, 5.0]
        assert np.allclose([t for _, t in result.rows], 1.0)

    def test_failed_frequencies_are_recorded(self, exterior, interior):
        """Test that an invalid array is reported per frequency."""
        template = arrays.ArrayTemplate(CircleShape(0.3), exterior, interior,
                                        ((0.0, 0.0), (0.4, 0.0)), 6)
        result = arrays.transmittance_spectrum(template, [3.0], GAMMA_IN, GAMMA_OUT)
        assert result.rows == []
        assert result.failures[0]["code"] == "WELL_SEPARATION"

    def test_point_source_spectrum(self, exterior, interior):
        """Test a chain of circles driven by a point source."""
        centers = tuple((float(i), 0.0) for i in range(3))
        template = arrays.ArrayTemplate(CircleShape(0.3), exterior, interior, centers, 8,
                                        incident=PointSource((-1.5, 0.0)))
        result = arrays.transmittance_spectrum(template, [3.0, 4.0], GAMMA_IN, GAMMA_OUT)
        assert len(result.rows) == 2
        assert all(t > 0 for _, t in result.rows)


@pytest.mark.slow
class TestChainPassivity:
    """Test cases for energy balance of long chains."""

    def test_twenty_circle_chain_is_passive(self, exterior, interior):
        """Test 0 <= T <= 1 across omega in [3, 11] for a 20-circle chain."""
        centers = tuple((float(i), 0.0) for i in range(20))
        template = arrays.ArrayTemplate(CircleShape(0.3), exterior, interior, centers, 15,
                                        incident=PointSource((-1.0, 0.0)))
        result = arrays.transmittance_spectrum(template, np.linspace(3.0, 11.0, 33),
                                               ((0.5, -0.5), (0.5, 0.5)),
                                               ((19.5, -0.5), (19.5, 0.5)))
        assert result.failures == []
        assert len(result.rows) == 33
        for _, t in result.rows:
            assert 0.0 <= t <= 1.0 + 1e-3
