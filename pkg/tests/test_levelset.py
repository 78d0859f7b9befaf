"""
Tests for B-spline level-set fields.
"""

import numpy as np
import pytest

from bicwave.core.errors import DomainError, ValidationError
from bicwave.models.geometry import LevelSetField
from bicwave.services.levelset import (
    l2_inner,
    l2_norm,
    l2_project,
    levelset_eval,
    normalize,
    sample_at_greville,
)

HALF = 0.354


@pytest.mark.unit
class TestLevelSetField:
    """Test cases for the level-set model."""

    def test_rejects_non_square_grid(self):
        """Test coefficient shape validation."""
        with pytest.raises(ValidationError):
            LevelSetField(np.zeros((8, 9)))

    def test_rejects_small_grid(self):
        """Test that the grid must exceed the spline degree."""
        with pytest.raises(ValidationError):
            LevelSetField(np.zeros((3, 3)))

    def test_arithmetic_requires_same_space(self):
        """Test that fields on different grids cannot be added."""
        with pytest.raises(ValidationError):
            LevelSetField(np.zeros((8, 8))) + LevelSetField(np.zeros((10, 10)))

    def test_scaling_and_negation(self):
        """Test scalar multiplication and negation."""
        field = LevelSetField(np.ones((8, 8)))
        assert np.allclose((2.0 * field).coeffs, 2.0)
        assert np.allclose((-field).coeffs, -1.0)


@pytest.mark.unit
class TestEvaluation:
    """Test cases for level-set evaluation."""

    def test_partition_of_unity(self):
        """Test that unit coefficients evaluate to one everywhere."""
        field = LevelSetField(np.ones((12, 12)))
        rng = np.random.default_rng(3)
        points = rng.uniform(-HALF, HALF, size=(50, 2))
        assert np.allclose(levelset_eval(field, points), 1.0)

    def test_scalar_point(self):
        """Test that a single point gives a scalar."""
        field = LevelSetField(np.ones((8, 8)))
        assert np.ndim(levelset_eval(field, [0.1, -0.2])) == 0

    def test_domain_corner_is_inside(self):
        """Test evaluation on the closed upper boundary."""
        field = LevelSetField(np.ones((8, 8)))
        assert levelset_eval(field, [HALF, HALF]) == pytest.approx(1.0)

    def test_point_outside_domain(self):
        """Test that points outside the design domain raise."""
        field = LevelSetField(np.ones((8, 8)))
        with pytest.raises(DomainError):
            levelset_eval(field, [0.0, 0.5])

    def test_greville_sampling_reproduces_linear(self):
        """Test that Greville sampling is exact for bilinear functions."""
        field = sample_at_greville(lambda p: 0.3 * p[:, 0] - 2.0 * p[:, 1] + 0.1, grid=16)
        points = np.array([[0.0, 0.0], [0.2, -0.1], [-0.3, 0.3]])
        expected = 0.3 * points[:, 0] - 2.0 * points[:, 1] + 0.1
        assert np.allclose(levelset_eval(field, points), expected, atol=1e-12)


@pytest.mark.unit
class TestProjection:
    """Test cases for L2 projection and inner products."""

    def test_project_constant(self):
        """Test that projecting a constant gives constant coefficients."""
        field = l2_project(lambda p: np.full(len(p), 2.5), grid=12)
        assert np.allclose(field.coeffs, 2.5, atol=1e-10)

    def test_project_cubic_polynomial(self):
        """Test that splines reproduce cubic polynomials exactly."""
        func = lambda p: p[:, 0] ** 3 - p[:, 0] * p[:, 1] ** 2  # noqa: E731
        field = l2_project(func, grid=10)
        points = np.array([[0.1, 0.2], [-0.25, 0.05], [0.3, -0.3]])
        assert np.allclose(levelset_eval(field, points), func(points), atol=1e-10)

    def test_inner_product_of_ones_is_area(self):
        """Test (1, 1) = |D|."""
        one = LevelSetField(np.ones((12, 12)))
        assert l2_inner(one, one) == pytest.approx((2 * HALF) ** 2, rel=1e-12)

    def test_normalize(self):
        """Test that normalize gives unit L2 norm."""
        field = sample_at_greville(lambda p: np.hypot(p[:, 0], p[:, 1]) - 0.2, grid=16)
        assert l2_norm(normalize(field)) == pytest.approx(1.0)

    def test_normalize_zero_field(self):
        """Test that the zero field cannot be normalized."""
        with pytest.raises(ValidationError):
            normalize(LevelSetField(np.zeros((8, 8))))

    def test_inner_product_requires_same_grid(self):
        """Test grid checking in the inner product."""
        with pytest.raises(ValidationError):
            l2_inner(LevelSetField(np.ones((8, 8))), LevelSetField(np.ones((9, 9))))
