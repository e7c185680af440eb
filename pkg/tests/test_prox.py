"""
Tests for proximal maps.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.core.errors import ConfigError, DomainError, ShapeMismatchError
from src.core.prox import (L1Prox, L21Prox, L2SqProx, NonnegProx, ProxKind, TVProx, make_prox,
                           prox_conjugate, prox_l1, prox_l2sq, prox_nonneg, prox_tv)
from src.core.tensor import norm2

images = arrays(np.float64, (4, 4), elements=st.floats(-10, 10, allow_nan=False))


class TestClosedFormProx:
    """Test the closed-form maps."""

    def test_soft_threshold(self):
        """Test l1 shrinkage values."""
        z = np.array([[3.0, -0.5], [1.0, -2.5]])
        assert prox_l1(z, 1.0).tolist() == [[2.0, 0.0], [0.0, -1.5]]

    def test_l2sq_shrinkage(self):
        """Test z / (1 + τ)."""
        assert prox_l2sq(np.full((2, 2), 3.0), 2.0).tolist() == [[1.0, 1.0], [1.0, 1.0]]

    def test_nonneg(self):
        """Test projection onto the nonnegative orthant."""
        assert prox_nonneg(np.array([[-1.0, 2.0]])).tolist() == [[0.0, 2.0]]
        assert NonnegProx().value(np.array([[-1.0]])) == float("inf")

    def test_zero_weight_is_identity(self):
        """Test τ = 0 for every kind."""
        z = np.random.default_rng(0).standard_normal((4, 4))
        for name in ("l1", "l2sq", "tv", "tv_aniso"):
            assert np.allclose(make_prox(name)(z, 0.0), z)

    def test_negative_weight(self):
        """Test the τ domain."""
        with pytest.raises(DomainError):
            L1Prox()(np.zeros((2, 2)), -0.1)

    @given(images, images, st.floats(0, 5))
    @settings(max_examples=40, deadline=None)
    def test_l1_nonexpansive(self, a, b, tau):
        """Test ‖prox(a) − prox(b)‖ ≤ ‖a − b‖."""
        assert norm2(prox_l1(a, tau) - prox_l1(b, tau)) <= norm2(a - b) + 1e-9

    @given(images, st.floats(0.01, 5))
    @settings(max_examples=40, deadline=None)
    def test_l1_separable(self, z, tau):
        """Test that each sample is thresholded on its own."""
        full = prox_l1(z, tau)
        single = prox_l1(z[:1, :1], tau)
        assert full[0, 0] == single[0, 0]


class TestGroupProx:
    """Test the l21 group shrinkage."""

    def test_group_shrinkage(self):
        """Test one (3, 4) group at τ = 1."""
        p = np.zeros((1, 1, 2))
        p[0, 0] = [3.0, 4.0]
        assert np.allclose(L21Prox()(p, 1.0)[0, 0], [2.4, 3.2])
        assert not np.any(L21Prox()(p, 6.0))

    def test_value(self):
        """Test the sum of group norms."""
        p = np.zeros((1, 2, 2))
        p[0, 0] = [3.0, 4.0]
        p[0, 1] = [0.0, 1.0]
        assert L21Prox().value(p) == pytest.approx(6.0)

    def test_needs_even_frames(self):
        """Test the layout check."""
        with pytest.raises(ShapeMismatchError):
            L21Prox()(np.zeros((2, 2, 3)), 1.0)


class TestTVProx:
    """Test the dual projected-gradient TV prox."""

    def test_constant_image_unchanged(self):
        """Test that a flat image has nothing to smooth."""
        z = np.full((6, 6), 0.3)
        assert np.allclose(prox_tv(z, 1.0), z)

    @pytest.mark.parametrize("isotropic", [True, False])
    def test_preserves_mean(self, isotropic):
        """Test that the circular TV prox keeps the mean."""
        z = np.random.default_rng(1).random((8, 8))
        x = prox_tv(z, 0.2, inner_iters=50, isotropic=isotropic)
        assert x.mean() == pytest.approx(z.mean(), abs=1e-12)

    @pytest.mark.parametrize("isotropic", [True, False])
    def test_reduces_objective(self, isotropic):
        """Test the prox objective against the input and a longer run."""
        z = np.random.default_rng(2).random((8, 8))
        tau = 0.1
        short = TVProx(isotropic, inner_iters=1500)
        reference = TVProx(isotropic, inner_iters=5000)
        x = short(z, tau)

        assert short.objective(x, z, tau) < short.objective(z, z, tau)
        assert short.objective(x, z, tau) <= reference.objective(reference(z, tau), z, tau) + 1e-3

    def test_frames_are_independent(self):
        """Test that a video is smoothed frame by frame."""
        rng = np.random.default_rng(3)
        video = rng.random((6, 6, 2))
        prox = TVProx(inner_iters=40)
        both = prox(video, 0.1)
        assert np.allclose(both[:, :, 1], prox(video[:, :, 1], 0.1))

    def test_value(self):
        """Test TV of a vertical edge on a circular grid."""
        image = np.zeros((4, 4))
        image[:, 2:] = 1.0
        assert TVProx(isotropic=False).value(image) == pytest.approx(8.0)
        assert TVProx(isotropic=True).value(image) == pytest.approx(8.0)

    def test_temporal_on_image_is_spatial(self):
        """Test that temporal coupling changes nothing for a single image."""
        z = np.random.default_rng(4).random((6, 6))
        assert np.array_equal(prox_tv(z, 0.1, inner_iters=25, temporal=True),
                              prox_tv(z, 0.1, inner_iters=25))

    def test_temporal_static_video(self):
        """Test that identical frames stay identical and keep the mean."""
        frame = np.random.default_rng(5).random((6, 6))
        video = np.repeat(frame[:, :, np.newaxis], 3, axis=2)
        x = prox_tv(video, 0.1, inner_iters=40, temporal=True)

        assert np.allclose(x[:, :, 0], x[:, :, 2], atol=1e-14)
        assert x.mean() == pytest.approx(video.mean(), abs=1e-12)

    def test_temporal_value(self):
        """Test that a flash in the first frame counts once per pixel."""
        video = np.zeros((2, 2, 3))
        video[:, :, 0] = 1.0
        assert TVProx(temporal=True).value(video) == pytest.approx(4.0)
        assert TVProx(isotropic=False, temporal=True).value(video) == pytest.approx(4.0)
        assert TVProx().value(video) == pytest.approx(0.0)

    def test_temporal_smooths_flicker(self):
        """Test that a flickering pixel is pulled toward its neighbours in time."""
        video = np.zeros((4, 4, 3))
        video[1, 1, 1] = 1.0
        prox = TVProx(temporal=True, inner_iters=200)
        x = prox(video, 0.1)

        assert prox.objective(x, video, 0.1) < prox.objective(video, video, 0.1)
        assert x[1, 1, 1] < TVProx(inner_iters=200)(video, 0.1)[1, 1, 1]

    def test_inner_iters_domain(self):
        """Test rejection of zero inner iterations."""
        with pytest.raises(DomainError):
            TVProx(inner_iters=0)

    def test_kinds(self):
        """Test the kind tags."""
        assert make_prox("tv").kind is ProxKind.TV_ISO
        assert make_prox("tv_aniso", inner_iters=5).kind is ProxKind.TV_ANISO
        assert make_prox("tv_aniso", inner_iters=5).inner_iters == 5
        assert make_prox("tv_st").kind is ProxKind.TV_ST_ISO
        assert make_prox("tv_st_aniso").temporal


class TestConjugateProx:
    """Test the Moreau identity and conjugate maps."""

    @pytest.mark.parametrize("prox", [L1Prox(), L2SqProx(), NonnegProx()],
                             ids=lambda p: p.kind.value)
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    def test_moreau_identity(self, prox, sigma):
        """Test prox_{σr*}(x) + σ prox_{r/σ}(x/σ) = x over 100 random inputs."""
        rng = np.random.default_rng(4)
        for _ in range(100):
            x = rng.standard_normal((4, 4)) * 3
            rebuilt = prox_conjugate(prox, x, sigma) + sigma * prox(x / sigma, 1.0 / sigma)
            assert np.max(np.abs(rebuilt - x)) <= 1e-12

    @pytest.mark.parametrize("sigma", [0.5, 2.0])
    def test_l1_conjugate_clamps(self, sigma):
        """Test that the conjugate of τ‖·‖₁ projects onto the τ box."""
        x = np.random.default_rng(5).standard_normal((4, 4)) * 2
        assert np.allclose(prox_conjugate(L1Prox(), x, sigma, tau=0.7), np.clip(x, -0.7, 0.7))

    def test_l21_conjugate_projects(self):
        """Test that the conjugate of τ‖·‖₂,₁ projects onto per-pixel l2 balls."""
        p = np.zeros((1, 2, 2))
        p[0, 0] = [3.0, 4.0]
        p[0, 1] = [0.1, 0.1]
        out = prox_conjugate(L21Prox(), p, 0.5, tau=1.0)
        assert np.allclose(out[0, 0], [0.6, 0.8])
        assert np.allclose(out[0, 1], [0.1, 0.1])

    def test_sigma_domain(self):
        """Test rejection of σ ≤ 0."""
        with pytest.raises(DomainError):
            prox_conjugate(L1Prox(), np.zeros((2, 2)), 0.0)


class TestFactory:
    """Test make_prox."""

    def test_unknown_name(self):
        """Test the error listing valid names."""
        with pytest.raises(ConfigError, match="l1"):
            make_prox("l0")
