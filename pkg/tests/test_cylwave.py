"""
Tests for cylindrical special functions, multipole bases and translations.
"""

import numpy as np
import pytest

from bicwave.core.errors import OutOfRangeError, SingularArgumentError, ValidationError
from bicwave.models.multipole import MultipoleVector
from bicwave.services import cylwave


@pytest.mark.unit
class TestSpecialFunctions:
    """Test cases for Bessel and Hankel evaluation."""

    @pytest.mark.property
    @pytest.mark.parametrize("z", [0.5, 3.0, 12.5, 2.0 + 0.5j, 7.0 - 1.0j])
    def test_wronskian(self, z):
        """Test J_n H1_n' - J_n' H1_n = 2i / (pi z) for several orders."""
        n = np.arange(-10, 11)
        lhs = (cylwave.bessel_j(n, z) * cylwave.hankel1_prime(n, z)
               - cylwave.bessel_j_prime(n, z) * cylwave.hankel1(n, z))
        expected = 2j / (np.pi * z)
        assert np.allclose(lhs, expected, rtol=1e-10, atol=0)

    def test_negative_order_symmetry(self):
        """Test J_{-n} = (-1)^n J_n."""
        n = np.arange(1, 15)
        z = 4.2 + 0.3j
        assert np.allclose(cylwave.bessel_j(-n, z), (-1.0) ** n * cylwave.bessel_j(n, z))

    def test_order_outside_window(self):
        """Test that orders beyond the supported window raise."""
        with pytest.raises(OutOfRangeError):
            cylwave.bessel_j(250, 1.0)

    def test_imaginary_part_outside_window(self):
        """Test that arguments with huge imaginary part raise instead of overflowing."""
        with pytest.raises(OutOfRangeError):
            cylwave.hankel1(0, 1.0 + 800j)

    def test_hankel_at_origin(self):
        """Test that H1_n(0) is rejected."""
        with pytest.raises(SingularArgumentError):
            cylwave.hankel1(0, 0.0)

    def test_fractional_order_rejected(self):
        """Test that non-integer orders are rejected."""
        with pytest.raises(ValidationError):
            cylwave.bessel_j(0.5, 1.0)


@pytest.mark.unit
class TestCylindricalWaves:
    """Test cases for the I_n / O_n bases."""

    def test_regular_wave_at_origin(self):
        """Test I_0(0) = 1 and I_n(0) = 0 otherwise."""
        values = cylwave.cylindrical_waves(np.arange(-3, 4), 1.0, np.zeros((1, 2)))
        expected = np.zeros(7)
        expected[3] = 1.0
        assert np.allclose(values[0], expected)

    def test_outgoing_wave_at_center_raises(self):
        """Test that O_n at the expansion center raises."""
        with pytest.raises(SingularArgumentError):
            cylwave.outgoing_wave(0, 1.0, np.zeros(2))

    @pytest.mark.parametrize("kind", ["regular", "outgoing"])
    def test_gradient_matches_finite_differences(self, kind):
        """Test the recurrence-based gradient against central differences."""
        orders = np.arange(-4, 5)
        k = 2.3
        x = np.array([[0.7, -0.4]])
        h = 1e-6
        _, grad = cylwave.cylindrical_waves(orders, k, x, kind, gradient=True)
        for axis in range(2):
            step = np.zeros((1, 2))
            step[0, axis] = h
            fd = (cylwave.cylindrical_waves(orders, k, x + step, kind)
                  - cylwave.cylindrical_waves(orders, k, x - step, kind)) / (2 * h)
            assert np.allclose(grad[0, axis], fd[0], rtol=1e-6, atol=1e-8)

    def test_unknown_kind(self):
        """Test that an unknown wave kind is rejected."""
        with pytest.raises(ValidationError):
            cylwave.cylindrical_waves([0], 1.0, [[1.0, 0.0]], kind="standing")


@pytest.mark.unit
class TestExpansions:
    """Test cases for plane-wave, point-source and translated expansions."""

    def test_plane_wave_expansion(self):
        """Test Sum_n A_n I_n(x) against exp(i k p.x)."""
        k = 3.0
        p = np.array([np.cos(0.7), np.sin(0.7)])
        A = cylwave.plane_wave_coeffs(p, 30, k)
        rng = np.random.default_rng(1)
        points = rng.uniform(-1.0, 1.0, size=(20, 2))
        series = cylwave.expansion_field(A, points, "regular")
        exact = np.exp(1j * k * points @ p)
        assert np.allclose(series, exact, atol=1e-11)

    def test_plane_wave_needs_unit_direction(self):
        """Test that a non-unit direction is rejected."""
        with pytest.raises(ValidationError):
            cylwave.plane_wave_coeffs([1.0, 1.0], 5)

    def test_point_source_expansion(self):
        """Test the regular re-expansion of H1_0(k|x - x_src|)."""
        k = 2.0
        x_src = np.array([2.0, 1.0])
        A = cylwave.point_source_coeffs(x_src, (0.0, 0.0), k, 30)
        points = np.array([[0.2, 0.1], [-0.3, 0.4], [0.0, -0.5]])
        series = cylwave.expansion_field(A, points, "regular")
        exact = cylwave.hankel1(0, k * np.linalg.norm(points - x_src, axis=1))
        assert np.allclose(series, exact, atol=1e-10)

    @pytest.mark.property
    def test_graf_translation(self):
        """Test that T maps outgoing coefficients about x_i to regular ones about x_j."""
        k = 1.0
        x_i = np.array([0.0, 0.0])
        x_j = np.array([1.5, 0.5])
        n_tr = 20
        coeffs = np.zeros(2 * n_tr + 1, dtype=complex)
        coeffs[n_tr - 2:n_tr + 3] = [0.3 - 0.1j, -0.5j, 1.0, 0.25 + 0.5j, -0.7]
        B = MultipoleVector(coeffs, x_i, k)

        T = cylwave.translation_matrix(k, x_j - x_i, n_tr)
        A = T.apply(B)

        assert np.allclose(A.center, x_j)
        points = x_j + np.array([[0.1, 0.0], [0.0, -0.2], [-0.15, 0.15]])
        outgoing = cylwave.expansion_field(B, points, "outgoing")
        regular = cylwave.expansion_field(A, points, "regular")
        assert np.allclose(outgoing, regular, rtol=1e-10, atol=1e-12)

    def test_translation_entries_are_order_differences(self):
        """Test entries[n][m] = O_{m-n}(d)."""
        d = np.array([0.8, -0.6])
        T = cylwave.translation_matrix(1.7, d, 3)
        for row, n in enumerate(range(-3, 4)):
            for col, m in enumerate(range(-3, 4)):
                assert T.entries[row, col] == pytest.approx(cylwave.outgoing_wave(m - n, 1.7, d))

    def test_zero_displacement_rejected(self):
        """Test that translating by zero raises."""
        with pytest.raises(SingularArgumentError):
            cylwave.translation_matrix(1.0, [0.0, 0.0], 3)
