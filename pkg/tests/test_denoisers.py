"""
Tests for denoisers and the RED regularizer.
"""

import numpy as np
import pytest

from src.core.denoisers import (DenoiserKind, DenoiserProx, GaussianFilterDenoiser,
                                LinearSymmetricDenoiser, MedianFilterDenoiser, ProxDenoiser,
                                denoise, local_homogeneity_defect, make_denoiser,
                                monte_carlo_divergence, red_gradient, red_regularizer_value)
from src.core.errors import ConfigError, DomainError
from src.core.linops import BlurKernel
from src.core.prox import L2SqProx, TVProx


@pytest.fixture
def noisy_image():
    return np.random.default_rng(21).random((8, 8))


class TestDenoisers:
    """Test the denoiser family."""

    @pytest.mark.parametrize("name", ["gaussian", "tv", "median", "linear_symmetric", "identity"])
    def test_shape_preserved(self, name, noisy_image):
        """Test that every denoiser keeps the shape, for images and videos."""
        d = make_denoiser(name)
        assert d(noisy_image, 0.1).shape == noisy_image.shape
        video = np.stack([noisy_image, noisy_image.T], axis=2)
        assert d(video, 0.1).shape == video.shape

    @pytest.mark.parametrize("name", ["gaussian", "tv", "median"])
    def test_zero_strength_is_identity(self, name, noisy_image):
        """Test D_0(v) = v."""
        assert np.allclose(make_denoiser(name)(noisy_image, 0.0), noisy_image)

    def test_negative_sigma(self, noisy_image):
        """Test the σ domain."""
        with pytest.raises(DomainError):
            denoise(GaussianFilterDenoiser(), noisy_image, -0.1)

    def test_gaussian_keeps_mean(self, noisy_image):
        """Test that the circular Gaussian filter preserves the mean."""
        smoothed = GaussianFilterDenoiser(width=10.0)(noisy_image, 0.1)
        assert smoothed.mean() == pytest.approx(noisy_image.mean(), abs=1e-12)
        assert smoothed.std() < noisy_image.std()

    def test_gaussian_does_not_mix_frames(self, noisy_image):
        """Test per-frame filtering of videos."""
        video = np.stack([noisy_image, np.zeros_like(noisy_image)], axis=2)
        out = GaussianFilterDenoiser(width=10.0)(video, 0.1)
        assert not np.any(out[:, :, 1])

    def test_median_removes_impulse(self):
        """Test that a single outlier is removed."""
        image = np.zeros((5, 5))
        image[2, 2] = 1.0
        assert not np.any(MedianFilterDenoiser()(image, 0.1))

    def test_linear_symmetric_needs_symmetric_kernel(self):
        """Test the point-symmetry check."""
        taps = np.zeros((3, 3))
        taps[0, 0] = 1.0
        with pytest.raises(DomainError):
            LinearSymmetricDenoiser(taps)

    def test_prox_denoiser(self, noisy_image):
        """Test D_σ = prox_{σr}."""
        d = ProxDenoiser(L2SqProx(), weight=2.0)
        assert d.is_linear
        assert np.allclose(d(noisy_image, 0.5), noisy_image / 2.0)
        assert d.kind is DenoiserKind.PROX_ADAPTER

    def test_denoiser_prox(self, noisy_image):
        """Test a denoiser standing in for a prox."""
        tv = make_denoiser("tv", inner_iters=20)
        fixed = DenoiserProx(tv, sigma=0.1)
        follows_tau = DenoiserProx(tv)
        assert np.allclose(fixed(noisy_image, 5.0), tv(noisy_image, 0.1))
        assert np.allclose(follows_tau(noisy_image, 0.2), TVProx(inner_iters=20)(noisy_image, 0.2))

    def test_unknown_name(self):
        """Test the factory error."""
        with pytest.raises(ConfigError, match="median"):
            make_denoiser("bm3d")


class TestRed:
    """Test the RED regularizer and gradient rule."""

    def test_gradient_matches_finite_differences(self):
        """Test λ(x − f(x)) against central differences of (λ/2)xᵀ(x − f(x))."""
        d = LinearSymmetricDenoiser()
        rng = np.random.default_rng(6)
        x = rng.random((8, 8))
        lam, step = 0.7, 1e-4
        gradient = red_gradient(d, x, lam)

        for flat in rng.choice(64, size=20, replace=False):
            index = np.unravel_index(flat, x.shape)
            e = np.zeros_like(x)
            e[index] = step
            numeric = (red_regularizer_value(d, x + e, lam)
                       - red_regularizer_value(d, x - e, lam)) / (2 * step)
            assert numeric == pytest.approx(gradient[index], abs=1e-5)

    def test_linear_denoiser_is_homogeneous(self):
        """Test the local homogeneity defect of a linear denoiser."""
        d = LinearSymmetricDenoiser(BlurKernel.box(3))
        x = np.random.default_rng(7).random((8, 8))
        assert local_homogeneity_defect(d, x, 1e-3) < 1e-12

    def test_homogeneity_eps_domain(self):
        """Test the ε range."""
        with pytest.raises(DomainError):
            local_homogeneity_defect(LinearSymmetricDenoiser(), np.ones((4, 4)), 0.1)

    def test_negative_lambda(self):
        """Test the λ domain."""
        with pytest.raises(DomainError):
            red_gradient(LinearSymmetricDenoiser(), np.ones((4, 4)), -1.0)

    def test_regularizer_nonnegative_for_smoother(self):
        """Test xᵀ(x − Wx) ≥ 0 for a contractive symmetric smoother."""
        d = LinearSymmetricDenoiser()
        x = np.random.default_rng(8).standard_normal((8, 8))
        assert red_regularizer_value(d, x, 1.0) >= 0.0


class TestDivergence:
    """Test the Monte Carlo divergence estimate."""

    def test_linear_denoiser_trace(self):
        """Test that the mean estimate approaches trace(W)."""
        d = LinearSymmetricDenoiser()
        v = np.random.default_rng(9).random((8, 8))
        estimates = [monte_carlo_divergence(d, v, 0.0, np.random.default_rng(seed))
                     for seed in range(50)]
        expected = d.center_tap * v.size
        assert np.mean(estimates) == pytest.approx(expected, rel=0.1)

    def test_identity_denoiser(self):
        """Test that the identity has divergence n on every draw."""
        d = make_denoiser("identity")
        v = np.random.default_rng(10).random((4, 4))
        estimate = monte_carlo_divergence(d, v, 0.0, np.random.default_rng(0))
        assert estimate == pytest.approx(16.0, rel=1e-9)

    def test_seeded(self):
        """Test reproducibility for a fixed generator seed."""
        d = GaussianFilterDenoiser()
        v = np.random.default_rng(11).random((6, 6))
        first = monte_carlo_divergence(d, v, 0.5, np.random.default_rng(3))
        second = monte_carlo_divergence(d, v, 0.5, np.random.default_rng(3))
        assert first == second
