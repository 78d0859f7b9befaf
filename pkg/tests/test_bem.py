"""
Tests for the Burton-Miller transmission solver.
"""

import numpy as np
import pytest
from scipy import integrate, special

from bicwave.core.errors import NearSingularError, ValidationError
from bicwave.models.medium import Medium
from bicwave.services import bem
from bicwave.services.incident import PlaneWave
from bicwave.services.mesh import discretize_circle

OMEGA = 2.0 * np.pi


def _plane_wave(k):
    wave = PlaneWave((np.cos(0.4), np.sin(0.4)))
    return lambda points: wave.field(points, k)


@pytest.mark.unit
class TestSelfIntegrals:
    """Test cases for the singular self-element integrals."""

    @pytest.mark.parametrize("k", [1.0, 6.0, 3.0 + 0.2j])
    def test_single_layer_matches_adaptive_quadrature(self, k):
        """Test the log-split rule against adaptive quadrature."""
        a = 0.02

        def part(s, which):
            value = 0.25j * special.hankel1(0, k * s)
            return value.real if which == "re" else value.imag

        re, _ = integrate.quad(part, 0.0, a, args=("re",), limit=200)
        im, _ = integrate.quad(part, 0.0, a, args=("im",), limit=200)
        expected = 2.0 * (re + 1j * im)
        assert bem.self_single_layer(a, k)[0] == pytest.approx(expected, rel=1e-9)

    def test_hypersingular_static_limit(self):
        """Test the finite part against -1/(pi a) as k -> 0."""
        a = 0.01
        value = bem.self_hypersingular(a, 1e-4)[0]
        assert value.real == pytest.approx(-1.0 / (np.pi * a), rel=1e-6)


@pytest.mark.service
class TestAssembly:
    """Test cases for Burton-Miller assembly."""

    def test_needs_eight_elements(self, exterior, interior):
        """Test the minimum element count."""
        mesh = discretize_circle((0.0, 0.0), 0.3, 6)
        with pytest.raises(ValidationError):
            bem.assemble_bm(mesh, exterior, interior, OMEGA)

    def test_zero_frequency(self, exterior, interior, circle_mesh):
        """Test that omega = 0 is rejected."""
        with pytest.raises(ValidationError):
            bem.assemble_bm(circle_mesh, exterior, interior, 0.0)

    def test_default_coupling_sign(self):
        """Test that the default coupling has negative imaginary part."""
        assert bem.default_eta(6.0).imag < 0
        assert bem.default_eta(0.0).imag < 0

    def test_matrix_shape_and_finiteness(self, exterior, interior, circle_mesh):
        """Test the 2N x 2N system."""
        matrix = bem.assemble_bm(circle_mesh, exterior, interior, OMEGA)
        assert matrix.shape == (400, 400)
        assert np.all(np.isfinite(matrix))


@pytest.mark.service
class TestTransmission:
    """Test cases for solving and representing transmission fields."""

    def test_zero_contrast_reproduces_incident(self, exterior):
        """Test that identical media give u = u_in and q = du_in/dn / rho."""
        mesh = discretize_circle((0.0, 0.0), 0.3, 400)
        k = exterior.wavenumber(OMEGA)
        u_in, dudn_in = bem.incident_trace(mesh, _plane_wave(k))
        densities = bem.solve_transmission(mesh, exterior, Medium(1.0, 1.0), OMEGA, (u_in, dudn_in))
        assert np.max(np.abs(densities.u - u_in)) < 1e-2
        assert np.max(np.abs(densities.q - dudn_in / exterior.rho)) < 5e-2 * np.max(np.abs(dudn_in))

    def test_zero_contrast_field_is_incident(self, exterior):
        """Test that the represented field equals the incident one on both sides."""
        mesh = discretize_circle((0.0, 0.0), 0.3, 400)
        k = exterior.wavenumber(OMEGA)
        incident = _plane_wave(k)
        densities = bem.solve_transmission(
            mesh, exterior, Medium(1.0, 1.0), OMEGA, bem.incident_trace(mesh, incident)
        )
        points = np.array([[0.0, 0.0], [0.1, -0.05], [0.6, 0.2], [-0.5, -0.5]])
        u, _ = bem.represent_field(densities, mesh, points, incident)
        expected, _ = incident(points)
        assert np.allclose(u, expected, atol=1e-2)

    def test_multiple_right_hand_sides(self, exterior, interior, circle_mesh):
        """Test that column solves match single solves."""
        k = exterior.wavenumber(OMEGA)
        solver = bem.TransmissionSolver(circle_mesh, exterior, interior, OMEGA)
        u1, d1 = bem.incident_trace(circle_mesh, _plane_wave(k))
        both = solver.solve(np.column_stack([u1, 2 * u1]), np.column_stack([d1, 2 * d1]))
        single = solver.solve(u1, d1)
        assert both.n_columns == 2
        assert np.allclose(both.column(1).u, 2 * single.u)

    def test_trace_shape_mismatch(self, exterior, interior, circle_mesh):
        """Test that wrong-length traces are rejected."""
        solver = bem.TransmissionSolver(circle_mesh, exterior, interior, OMEGA)
        with pytest.raises(ValidationError):
            solver.solve(np.ones(10), np.ones(10))

    def test_point_on_boundary(self, exterior, interior, circle_mesh):
        """Test that evaluating on the boundary raises."""
        k = exterior.wavenumber(OMEGA)
        densities = bem.solve_transmission(
            circle_mesh, exterior, interior, OMEGA, bem.incident_trace(circle_mesh, _plane_wave(k))
        )
        with pytest.raises(NearSingularError):
            bem.represent_field(densities, circle_mesh, circle_mesh.midpoints[0])
