"""
Tests for the dense reference computations.
"""

import numpy as np
import pytest

from src.config.settings import reset_settings
from src.core.errors import ConvergenceError, DomainError, SizeError
from src.core.linops import make_identity, make_matrix
from src.core.oracle import (DenseMatrix, check_desk_scale, dense_gap_x_update,
                             dense_least_squares, dense_max_eigenvalue, dense_solve_normal,
                             materialize)
from src.models.volume import Shape


class TestDenseMatrix:
    """Test DenseMatrix model."""

    def test_requires_2d(self):
        """Test rejection of vectors."""
        with pytest.raises(DomainError):
            DenseMatrix(np.ones(3))

    def test_requires_finite(self):
        """Test rejection of NaN entries."""
        with pytest.raises(DomainError):
            DenseMatrix(np.array([[1.0, np.nan]]))

    def test_transpose_swaps_shapes(self):
        """Test the transposed view."""
        m = DenseMatrix(np.ones((2, 3)), Shape.image(3, 1), Shape.image(2, 1))
        assert m.T.rows == 3
        assert m.T.domain_shape == Shape.image(2, 1)

    def test_as_operator(self):
        """Test wrapping back into an operator."""
        m = DenseMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
        op = m.as_operator()
        assert op.apply(np.array([[1.0], [1.0]])).ravel().tolist() == [3.0, 7.0]


class TestSizeCap:
    """Test the desk-scale limit."""

    def test_explicit_cap(self):
        """Test SizeError above an explicit cap."""
        with pytest.raises(SizeError, match="capped at 10"):
            materialize(make_identity(Shape.image(4, 4)), max_unknowns=10)

    def test_cap_from_settings(self, monkeypatch):
        """Test that the default cap follows ORACLE_MAX_UNKNOWNS."""
        monkeypatch.setenv("ORACLE_MAX_UNKNOWNS", "8")
        reset_settings()
        with pytest.raises(SizeError):
            check_desk_scale(9)
        check_desk_scale(8)

    def test_default_cap(self):
        """Test the 4096 default."""
        check_desk_scale(4096)
        with pytest.raises(SizeError):
            check_desk_scale(4097)


class TestDenseAlgebra:
    """Test the numpy.linalg-backed reference solves."""

    def test_solve_normal(self):
        """Test (I + γAᵀA)x = b on a diagonal matrix."""
        m = DenseMatrix(np.diag([1.0, 2.0]))
        x = dense_solve_normal(m, 1.0, np.array([2.0, 5.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_ill_conditioned_system(self):
        """Test the condition-number guard."""
        m = DenseMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
        with pytest.raises(ConvergenceError, match="ill-conditioned"):
            dense_solve_normal(m, 1e14, np.ones(2))

    def test_least_squares_minimum_norm(self):
        """Test the minimum-norm solution of an underdetermined system."""
        m = DenseMatrix(np.array([[1.0, 1.0]]))
        assert np.allclose(dense_least_squares(m, np.array([2.0])), [1.0, 1.0])

    def test_max_eigenvalue(self):
        """Test λ_max(AᵀA) for wide and tall matrices."""
        a = np.array([[3.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert dense_max_eigenvalue(DenseMatrix(a)) == pytest.approx(9.0)
        assert dense_max_eigenvalue(DenseMatrix(a.T)) == pytest.approx(9.0)

    def test_volume_shapes_are_kept(self):
        """Test that volume inputs come back as volumes."""
        op = make_identity(Shape.image(2, 3))
        b = np.arange(6.0).reshape(2, 3)
        assert dense_solve_normal(materialize(op), 1.0, b).shape == (2, 3)


class TestGapProjection:
    """Test the dense GAP x-update."""

    def test_matches_explicit_formula(self):
        """Test θ + Aᵀ(AAᵀ)⁻¹(y − Aθ) for a full-row-rank matrix."""
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 6))
        op = make_matrix(a, Shape.image(2, 3), Shape.image(2, 2))
        theta = rng.standard_normal((2, 3))
        y = rng.standard_normal((2, 2))

        t = theta.ravel()
        expected = t + a.T @ np.linalg.solve(a @ a.T, y.ravel() - a @ t)
        x = dense_gap_x_update(op, theta, y)

        assert np.allclose(x.ravel(), expected, atol=1e-10)
        assert np.allclose(op.apply(x), y, atol=1e-10)
