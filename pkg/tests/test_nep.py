"""
Tests for the contour-integral nonlinear eigensolver.
"""

import numpy as np
import pytest

from bicwave.core.errors import DegenerateEigenvalueError, QuadratureNodeError, ValidationError
from bicwave.models.eigen import ContourSpec, EigenPair
from bicwave.services import nep


def _contour(**overrides):
    params = dict(quad_points=64, moments=4, probes=2, seed=0)
    params.update(overrides)
    return ContourSpec(0.0, 1.0, **params)


@pytest.mark.unit
class TestContourSpec:
    """Test cases for contour validation and nodes."""

    def test_nodes_on_circle(self):
        """Test that nodes are offset half a step from the real axis."""
        contour = ContourSpec(1.0 + 1.0j, 0.5, quad_points=8)
        nodes = contour.nodes()
        assert np.allclose(np.abs(nodes - contour.center), 0.5)
        assert not np.any(np.isclose(nodes.imag, 1.0))

    def test_rejects_few_nodes(self):
        """Test the minimum node count."""
        with pytest.raises(ValidationError):
            ContourSpec(0.0, 1.0, quad_points=4)

    def test_rejects_bad_radius(self):
        """Test radius validation."""
        with pytest.raises(ValidationError):
            ContourSpec(0.0, 0.0)


@pytest.mark.unit
class TestBlockSS:
    """Test cases for ssm_solve."""

    def test_linear_scalar(self):
        """Test a single root of z - 0.3."""
        result = nep.ssm_solve(lambda z: np.array([[z - 0.3]]), _contour(probes=1), workers=2)
        assert len(result) == 1
        assert result[0].z == pytest.approx(0.3, abs=1e-10)

    def test_diagonal_with_root_outside(self):
        """Test that only roots inside the circle are returned."""
        roots = np.array([0.1, -0.2 + 0.1j, 0.5, 2.0])
        result = nep.ssm_solve(lambda z: np.diag(z - roots), _contour(), workers=2)
        found = np.sort_complex(result.eigenvalues)
        assert found.size == 3
        assert np.allclose(found, np.sort_complex(roots[:3]), atol=1e-10)

    def test_nonlinear_planted_roots(self):
        """Test exp and quadratic roots of a triangular matrix function."""

        def F(z):
            return np.array([[np.exp(z) - np.exp(0.2), 0.1], [0.0, z * z - 0.36]])

        result = nep.ssm_solve(F, _contour(), workers=2)
        found = np.sort(result.eigenvalues.real)
        assert np.allclose(found, [-0.6, 0.2, 0.6], atol=1e-9)
        assert np.allclose(result.eigenvalues.imag, 0.0, atol=1e-9)
        assert all(pair.residual < 1e-8 for pair in result)

    def test_seed_determinism(self):
        """Test that a fixed seed gives identical results."""
        roots = np.array([0.1, -0.3, 0.45j])

        def F(z):
            return np.diag(z - roots) + 0.01 * np.ones((3, 3))

        first = nep.ssm_solve(F, _contour(seed=7), workers=1).eigenvalues
        second = nep.ssm_solve(F, _contour(seed=7), workers=3).eigenvalues
        assert np.array_equal(first, second)

    def test_no_roots(self):
        """Test that a root-free contour gives no accepted pairs."""
        result = nep.ssm_solve(lambda z: np.array([[z - 5.0]]), _contour(probes=1), workers=1)
        assert len(result) == 0

    def test_singular_node(self):
        """Test that a root on a quadrature node raises."""
        contour = _contour(probes=1)
        node = contour.nodes()[0]
        with pytest.raises(QuadratureNodeError):
            nep.ssm_solve(lambda z: np.array([[z - node]]), contour, workers=1)

    def test_random_polynomial_planted_roots(self):
        """Test a seeded 50 x 50 quadratic matrix polynomial with five roots planted inside."""
        rng = np.random.default_rng(2024)
        n = 50

        def complex_gaussian(*shape):
            return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

        planted = np.array([0.1 + 0.05j, -0.2 + 0.1j, 0.05 - 0.25j, 0.3, -0.15 - 0.15j])
        far = (2.0 + 3.0 * rng.random(2 * n)) * np.exp(2j * np.pi * rng.random(2 * n))
        first = far[:n].copy()
        first[: planted.size] = planted
        second = far[n:]
        u, w = complex_gaussian(n, n), complex_gaussian(n, n)
        # A_k = U diag(c_k) W with c_k the coefficients of (z - first)(z - second)
        coefficients = (first * second, -(first + second), np.ones(n))
        A = [u @ np.diag(c) @ w for c in coefficients]

        def F(z):
            return A[0] + z * A[1] + z * z * A[2]

        contour = ContourSpec(0.0, 0.5, quad_points=64, moments=4, probes=4, seed=3)
        result = nep.ssm_solve(F, contour, workers=2)
        found = result.eigenvalues
        assert found.size == planted.size
        for root in planted:
            assert np.min(np.abs(found - root)) < 1e-10

    def test_eigenvectors_are_null_vectors(self):
        """Test that returned vectors annihilate F."""
        A = np.array([[0.2, 0.1], [0.05, -0.3]])
        result = nep.ssm_solve(lambda z: A - z * np.eye(2), _contour(), workers=2)
        for pair in result:
            assert np.linalg.norm((A - pair.z * np.eye(2)) @ pair.right_vec) < 1e-9


@pytest.mark.unit
class TestEigenpairTools:
    """Test cases for left vectors and Newton refinement."""

    def test_left_eigenvector(self):
        """Test y^H F(z) = 0 for a non-normal matrix."""

        def F(z):
            return np.array([[z - 0.3, 1.0], [0.0, 2.0]])

        y = nep.left_eigenvector(F, 0.3)
        assert np.linalg.norm(y) == pytest.approx(1.0)
        assert np.linalg.norm(y.conj() @ F(0.3)) < 1e-12

    def test_degenerate_left_vector(self):
        """Test that a double eigenvalue has no unique left vector."""
        with pytest.raises(DegenerateEigenvalueError):
            nep.left_eigenvector(lambda z: (z - 0.3) * np.eye(2), 0.3)

    def test_left_eigenvector_with_large_singular_value(self):
        """Test that a simple eigenvalue is accepted when the largest singular value is huge."""

        def F(z):
            return np.diag([1e14, 1.0, z - 0.3]).astype(complex)

        y = nep.left_eigenvector(F, 0.3 + 1e-9)
        assert abs(y[2]) == pytest.approx(1.0)

    def test_nearly_coincident_singular_values(self):
        """Test that two comparable small singular values are flagged."""
        with pytest.raises(DegenerateEigenvalueError):
            nep.left_eigenvector(lambda z: np.diag([1e6, 1e-9, 2e-9]), 0.0)

    def test_newton_refinement(self):
        """Test that Newton polishing converges to the exact root."""

        def F(z):
            return np.diag([z - 0.3, z + 0.5])

        rough = EigenPair(0.3 + 1e-4, np.array([1.0, 1e-3]), 0.0)
        rough = EigenPair(rough.z, rough.right_vec, nep.relative_residual(F, rough.z, rough.right_vec))
        refined = nep.refine_eigenpair(F, rough.z, rough)
        assert refined.refinement == "newton"
        assert refined.z == pytest.approx(0.3, abs=1e-10)
        assert refined.residual < rough.residual

    def test_converged_pair_untouched(self):
        """Test that a converged pair is returned as is."""
        pair = EigenPair(0.3, np.array([1.0, 0.0]), 0.0)
        assert nep.refine_eigenpair(lambda z: np.diag([z - 0.3, 1.0]), 0.3, pair) is pair
