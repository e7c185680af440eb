"""
Tests for forward operators.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DomainError, ShapeMismatchError
from src.core.linops import (BlurKernel, adjoint_mismatch, compose, make_conv, make_gradient,
                             make_identity, make_mask, make_matrix, make_subsample, make_superres,
                             power_iteration_norm, scale)
from src.core.oracle import dense_max_eigenvalue, dense_solve_normal, materialize
from src.core.sci import SciOperator, random_binary_masks
from src.core.tensor import vectorize
from src.models.volume import Shape

IMAGE = Shape.image(8, 8)
VIDEO = Shape.video(6, 6, 3)


def _operators():
    rng = np.random.default_rng(0)
    kernel = BlurKernel.gaussian(1.0)
    return {
        "identity": make_identity(IMAGE),
        "mask": make_mask((rng.random(IMAGE.dims) < 0.5).astype(float)),
        "conv": make_conv(kernel, IMAGE),
        "conv_video": make_conv(BlurKernel.box(3), VIDEO),
        "superres": make_superres(kernel, IMAGE, 2),
        "compose": compose(make_subsample(IMAGE, 2), make_conv(kernel, IMAGE)),
        "sci": SciOperator(random_binary_masks(VIDEO, 0.5, 4)),
        "gradient": make_gradient(IMAGE),
        "gradient_video": make_gradient(VIDEO),
        "gradient_st": make_gradient(VIDEO, temporal=True),
        "scaled": scale(make_conv(kernel, IMAGE), 3.0),
        "matrix": make_matrix(rng.standard_normal((6, 8)), Shape.image(2, 4), Shape.image(3, 2)),
    }


OPERATORS = _operators()


class TestBlurKernel:
    """Test BlurKernel model."""

    def test_builders(self):
        """Test delta, box and Gaussian kernels."""
        assert BlurKernel.delta().taps[1, 1] == 1.0
        assert BlurKernel.box(3).normalization == pytest.approx(1.0)
        gaussian = BlurKernel.gaussian(1.0)
        assert gaussian.shape == (7, 7)
        assert gaussian.normalization == pytest.approx(1.0)

    def test_from_spec(self):
        """Test the CLI kernel names."""
        assert BlurKernel.from_spec("box:5").shape == (5, 5)
        assert BlurKernel.from_spec("gaussian:0.5").shape == (5, 5)
        with pytest.raises(DomainError):
            BlurKernel.from_spec("motion:3")

    def test_even_extent_rejected(self):
        """Test the odd-extent requirement."""
        with pytest.raises(DomainError):
            BlurKernel(np.ones((2, 3)))

    def test_taps_are_read_only(self):
        """Test immutability of the taps."""
        kernel = BlurKernel.box(3)
        with pytest.raises(ValueError):
            kernel.taps[0, 0] = 1.0

    def test_normalized(self):
        """Test unit-sum scaling."""
        assert BlurKernel(np.full((3, 3), 2.0)).normalized().normalization == pytest.approx(1.0)
        with pytest.raises(DomainError):
            BlurKernel(np.zeros((1, 1))).normalized()


class TestAdjoints:
    """Test <Ax, y> = <x, Aᵀy> for every operator."""

    @pytest.mark.parametrize("name", sorted(OPERATORS))
    def test_adjoint_identity(self, name):
        """Test 100 seeded random pairs."""
        op = OPERATORS[name]
        rng = np.random.default_rng(42)
        worst = max(
            adjoint_mismatch(op, rng.standard_normal(op.domain_shape.dims),
                             rng.standard_normal(op.range_shape.dims))
            for _ in range(100)
        )
        assert worst <= 1e-10

    @pytest.mark.parametrize("name", sorted(OPERATORS))
    def test_materialized_matches(self, name):
        """Test apply and adjoint against the materialized matrix."""
        op = OPERATORS[name]
        dense = materialize(op)
        rng = np.random.default_rng(3)
        x = rng.standard_normal(op.domain_shape.dims)
        y = rng.standard_normal(op.range_shape.dims)
        assert np.allclose(vectorize(op.apply(x)), dense.entries @ vectorize(x), atol=1e-12)
        assert np.allclose(vectorize(op.adjoint(y)), dense.entries.T @ vectorize(y), atol=1e-12)

    @given(st.floats(-5, 5, allow_nan=False), st.floats(-5, 5, allow_nan=False))
    @settings(max_examples=20, deadline=None)
    def test_linearity(self, a, b):
        """Test A(ax + by) = aAx + bAy for the convolution."""
        op = OPERATORS["conv"]
        rng = np.random.default_rng(9)
        x, y = rng.standard_normal(IMAGE.dims), rng.standard_normal(IMAGE.dims)
        assert np.allclose(op.apply(a * x + b * y), a * op.apply(x) + b * op.apply(y), atol=1e-10)


class TestShapes:
    """Test shape checks and degenerate operators."""

    def test_wrong_input_shape(self):
        """Test that apply checks its input."""
        with pytest.raises(ShapeMismatchError):
            OPERATORS["conv"].apply(np.zeros((4, 4)))

    def test_compose_chain_mismatch(self):
        """Test a composition whose shapes do not chain."""
        with pytest.raises(ShapeMismatchError):
            compose(make_identity(Shape.image(4, 4)), make_identity(IMAGE))

    def test_kernel_larger_than_image(self):
        """Test the kernel extent check."""
        with pytest.raises(ShapeMismatchError):
            make_conv(BlurKernel.box(5), Shape.image(3, 3))

    def test_superres_divisibility(self):
        """Test the factor check."""
        with pytest.raises(ShapeMismatchError):
            make_superres(BlurKernel.delta(), Shape.image(9, 9), 2)

    def test_non_binary_mask(self):
        """Test rejection of fractional masks."""
        with pytest.raises(DomainError):
            make_mask(np.full((2, 2), 0.5))

    def test_only_circular_boundary(self):
        """Test the boundary argument."""
        with pytest.raises(DomainError):
            make_conv(BlurKernel.delta(), IMAGE, boundary="zero")

    def test_one_by_one(self):
        """Test a 1x1 image with a 1x1 kernel."""
        op = make_conv(BlurKernel(np.array([[2.0]])), Shape.image(1, 1))
        assert op.apply(np.array([[3.0]])).tolist() == [[6.0]]

    def test_zero_operator(self):
        """Test that 0·A maps everything to zero."""
        op = scale(make_identity(IMAGE), 0.0)
        assert not np.any(op.apply(np.ones(IMAGE.dims)))
        assert power_iteration_norm(op) == 0.0

    def test_temporal_gradient_needs_video(self):
        """Test that the spatio-temporal gradient rejects a single image."""
        with pytest.raises(ShapeMismatchError):
            make_gradient(IMAGE, temporal=True)

    def test_temporal_difference_does_not_wrap(self):
        """Test that the last frame has no temporal difference."""
        video = np.zeros(VIDEO.dims)
        video[:, :, 0] = 1.0
        d = make_gradient(VIDEO, temporal=True).apply(video)
        d_time = d[:, :, 2 * VIDEO.nframe:]
        assert np.all(d_time[:, :, 0] == -1.0)
        assert not np.any(d_time[:, :, 1:])

    def test_adjoint_operator(self):
        """Test the transposed view."""
        op = OPERATORS["superres"]
        y = np.ones(op.range_shape.dims)
        assert np.array_equal(op.T.apply(y), op.adjoint(y))
        assert op.T.domain_shape == op.range_shape


class TestClosedForms:
    """Test closed-form normal solves and Gram diagonals."""

    @pytest.mark.parametrize("name", ["identity", "mask", "conv", "conv_video", "sci", "scaled"])
    def test_normal_solve_matches_dense(self, name):
        """Test (I + γAᵀA)⁻¹b against a dense solve."""
        op = OPERATORS[name]
        assert op.has_normal_solve
        dense = materialize(op)
        b = np.random.default_rng(8).standard_normal(op.domain_shape.dims)
        for gamma in (0.1, 1.0, 10.0):
            assert np.allclose(op.normal_solve(b, gamma), dense_solve_normal(dense, gamma, b),
                               atol=1e-8)

    def test_normal_solve_not_available(self):
        """Test that operators without a closed form say so."""
        with pytest.raises(NotImplementedError):
            OPERATORS["superres"].normal_solve(np.zeros(IMAGE.dims), 1.0)

    def test_negative_gamma(self):
        """Test the γ domain."""
        with pytest.raises(DomainError):
            OPERATORS["identity"].normal_solve(np.zeros(IMAGE.dims), -1.0)

    @pytest.mark.parametrize("name", ["identity", "mask", "sci"])
    def test_gram_diagonal(self, name):
        """Test diag(AAᵀ) against the materialized matrix."""
        op = OPERATORS[name]
        dense = materialize(op).entries
        assert np.allclose(vectorize(op.gram_diagonal()), np.diag(dense @ dense.T))

    def test_gap_project_zero_diagonal(self):
        """Test that a mask with unobserved pixels cannot be projected onto generically."""
        op = make_mask(np.array([[1.0, 0.0], [1.0, 1.0]]))
        with pytest.raises(DomainError, match="zero diagonal"):
            op.gap_project(np.zeros((2, 2)), np.ones((2, 2)))


class TestPowerIteration:
    """Test the ‖A‖² estimate."""

    @pytest.mark.parametrize("name", ["conv", "sci", "superres"])
    def test_matches_dense_eigenvalue(self, name):
        """Test against the dense largest eigenvalue."""
        op = OPERATORS[name]
        exact = dense_max_eigenvalue(materialize(op))
        assert power_iteration_norm(op, iters=300) == pytest.approx(exact, rel=1e-6)

    def test_spatio_temporal_gradient_bound(self):
        """Test ‖D‖² ≤ 12, the bound behind the temporal TV dual step."""
        exact = dense_max_eigenvalue(materialize(OPERATORS["gradient_st"]))
        assert 8.0 <= exact <= 12.0

    def test_iters_domain(self):
        """Test rejection of zero iterations."""
        with pytest.raises(DomainError):
            power_iteration_norm(OPERATORS["identity"], iters=0)
