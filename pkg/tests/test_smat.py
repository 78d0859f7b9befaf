"""
Tests for single-scatterer scattering matrices.
"""

import numpy as np
import pytest

from bicwave.core.errors import ValidationError
from bicwave.models.medium import Medium
from bicwave.services import smat
from bicwave.services.cylwave import plane_wave_coeffs
from bicwave.services.mesh import discretize_circle

OMEGA = 2.0 * np.pi


@pytest.mark.unit
class TestTruncationOrder:
    """Test cases for the truncation rule."""

    def test_unit_product(self):
        """Test ceil(kd + 8 ln(kd + pi)) at kd = 1."""
        assert smat.truncation_order(1.0, 1.0) == 13

    def test_grows_with_frequency(self):
        """Test monotonic growth in k."""
        assert smat.truncation_order(10.0, 1.0) > smat.truncation_order(1.0, 1.0)

    def test_rejects_nonpositive(self):
        """Test argument validation."""
        with pytest.raises(ValidationError):
            smat.truncation_order(0.0, 1.0)


@pytest.mark.unit
class TestPartialWaveMatrix:
    """Test cases for the analytic circle scattering matrix."""

    @pytest.mark.property
    def test_unitary_and_reciprocal(self, exterior, interior):
        """Test energy conservation and reciprocity at real frequency."""
        S = smat.mie_scattering_matrix(0.3, exterior, interior, OMEGA, 10)
        assert smat.unitarity_defect(S) < 1e-12
        assert smat.reciprocity_defect(S) < 1e-12

    def test_zero_contrast(self, exterior):
        """Test that identical media do not scatter."""
        S = smat.mie_scattering_matrix(0.3, exterior, Medium(1.0, 1.0), OMEGA, 10)
        assert np.max(np.abs(S.entries)) < 1e-14

    def test_vanishing_radius(self, exterior, interior):
        """Test that S -> 0 as the radius shrinks."""
        S = smat.mie_scattering_matrix(1e-4, exterior, interior, OMEGA, 5)
        assert np.max(np.abs(S.entries)) < 1e-5

    def test_field_continuity_across_interface(self, exterior, interior):
        """Test continuity of u and (1/rho) du/dr at the circle."""
        S = smat.mie_scattering_matrix(0.3, exterior, interior, OMEGA, 10)
        A = plane_wave_coeffs((1.0, 0.0), 10, S.k)
        direction = np.array([np.cos(1.1), np.sin(1.1)])
        inner = (0.3 - 1e-9) * direction
        outer = (0.3 + 1e-9) * direction
        u_in, g_in = smat.scattered_field(S, A, inner, gradient=True)
        u_out, g_out = smat.scattered_field(S, A, outer, gradient=True)
        assert u_in == pytest.approx(u_out, abs=1e-6)
        assert (g_in @ direction) / interior.rho == pytest.approx((g_out @ direction) / exterior.rho, abs=1e-6)

    def test_incident_truncation_mismatch(self, exterior, interior):
        """Test that A and S must share n_tr."""
        S = smat.mie_scattering_matrix(0.3, exterior, interior, OMEGA, 10)
        with pytest.raises(ValidationError):
            smat.scattered_field(S, plane_wave_coeffs((1.0, 0.0), 8, S.k), [1.0, 0.0])

    def test_nonpositive_radius(self, exterior, interior):
        """Test radius validation."""
        with pytest.raises(ValidationError):
            smat.mie_scattering_matrix(0.0, exterior, interior, OMEGA, 5)


@pytest.mark.service
class TestBoundaryElementMatrix:
    """Test cases for BEM scattering matrices."""

    def test_zero_contrast(self, exterior):
        """Test that a BEM matrix with identical media is near zero."""
        mesh = discretize_circle((0.0, 0.0), 0.3, 200)
        S = smat.build_scattering_matrix(mesh, exterior, Medium(1.0, 1.0), OMEGA, (0.0, 0.0), 6)
        assert np.max(np.abs(S.entries)) < 1e-3

    def test_keeps_densities(self, exterior, interior, circle_mesh):
        """Test that per-order densities are stored for near fields."""
        S = smat.build_scattering_matrix(circle_mesh, exterior, interior, OMEGA, (0.0, 0.0), 6)
        assert S.has_fields
        assert S.densities.n_columns == 13
        assert S.enclosing_radius == pytest.approx(0.3)

    @pytest.mark.slow
    def test_matches_partial_waves(self, exterior, interior):
        """Test BEM-vs-analytic agreement and its decrease with refinement."""
        rows = smat.convergence_study(0.3, exterior, interior, OMEGA, 8, [100, 400])
        assert rows[1]["max_error"] < rows[0]["max_error"]
        assert rows[1]["max_error"] < 5e-3
        assert np.isnan(rows[0]["b0_change"])

    @pytest.mark.slow
    def test_near_unitary(self, exterior, interior):
        """Test energy conservation of the BEM matrix at real frequency."""
        mesh = discretize_circle((0.0, 0.0), 0.3, 400)
        S = smat.build_scattering_matrix(mesh, exterior, interior, OMEGA, (0.0, 0.0), 8)
        assert smat.unitarity_defect(S) < 1e-2
        assert smat.reciprocity_defect(S) < 1e-2

    def test_near_field_inside_enclosing_disk(self, exterior, interior, circle_mesh):
        """Test that points inside the enclosing disk use the stored densities."""
        S = smat.build_scattering_matrix(circle_mesh, exterior, interior, OMEGA, (0.0, 0.0), 6)
        A = plane_wave_coeffs((1.0, 0.0), 6, S.k)
        u = smat.scattered_field(S, A, [[0.0, 0.0], [0.1, 0.1]])
        assert u.shape == (2,)
        assert np.all(np.isfinite(u))
