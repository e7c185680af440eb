"""
Shared fixtures for the ProxRecon test suite.
"""

import numpy as np
import pytest

from src.config.settings import reset_settings
from src.core.linops import BlurKernel, make_conv, make_mask
from src.core.phantoms import cartoon, moving_square
from src.core.sci import SciOperator, random_binary_masks
from src.core.solvers import Problem
from src.models.volume import Shape

# Mild, well-conditioned blur used by the solver agreement tests.
MILD_TAPS = np.array([[0.0, 0.05, 0.0],
                      [0.05, 0.8, 0.05],
                      [0.0, 0.05, 0.0]])


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test sees settings rebuilt from a clean environment."""
    for name in ("LOG_LEVEL", "LOG_FILE", "ORACLE_MAX_UNKNOWNS", "TV_INNER_ITERS",
                 "BENCH_WORKERS", "ENVIRONMENT", "DEBUG", "DEFAULT_SEED"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def image_shape():
    return Shape.image(8, 8)


@pytest.fixture
def video_shape():
    return Shape.video(8, 8, 4)


@pytest.fixture
def mild_kernel():
    return BlurKernel(MILD_TAPS)


@pytest.fixture
def deblur_problem(mild_kernel, image_shape):
    """8x8 cartoon blurred by the mild kernel, no noise."""
    op = make_conv(mild_kernel, image_shape)
    truth = cartoon(image_shape)
    return Problem(op, op.apply(truth), ground_truth=truth)


@pytest.fixture
def gaussian_deblur_problem(image_shape):
    """8x8 cartoon blurred by a unit Gaussian with a little seeded noise."""
    op = make_conv(BlurKernel.gaussian(1.0), image_shape)
    truth = cartoon(image_shape)
    noise = np.random.default_rng(5).normal(0.0, 0.01, image_shape.dims)
    return Problem(op, op.apply(truth) + noise, ground_truth=truth)


@pytest.fixture
def inpaint_problem():
    """16x16 cartoon with half of its pixels observed."""
    shape = Shape.image(16, 16)
    mask = random_binary_masks(shape, 0.5, 3)[:, :, 0]
    op = make_mask(mask)
    truth = cartoon(shape)
    return Problem(op, op.apply(truth), ground_truth=truth)


@pytest.fixture
def sci_operator(video_shape):
    return SciOperator(random_binary_masks(video_shape, 0.5, 11))


@pytest.fixture
def sci_problem():
    """16x16x4 moving square under density-0.5 masks (seed 7), noiseless."""
    shape = Shape.video(16, 16, 4)
    op = SciOperator(random_binary_masks(shape, 0.5, 7))
    truth = moving_square(shape)
    return Problem(op, op.apply(truth), ground_truth=truth)
