"""
Synthetic ground truths and measurement noise.
"""

from typing import Optional

import numpy as np

from ..models.volume import Shape
from .errors import ConfigError, DomainError

PHANTOMS = ("moving_square", "cartoon")


def moving_square(shape: Shape, background: float = 0.0, level: float = 1.0) -> np.ndarray:
    """Square of side ncol/4 translating one pixel right per frame."""
    side = max(1, min(shape.nrow, shape.ncol) // 4)
    top = (shape.nrow - side) // 2
    span = shape.ncol - side + 1
    start = shape.ncol // 8
    video = np.full((shape.nrow, shape.ncol, shape.nframe), background, dtype=np.float64)
    for k in range(shape.nframe):
        left = (start + k) % span
        video[top:top + side, left:left + side, k] = level
    return video if shape.ndim == 3 else video[:, :, 0]


def cartoon(shape: Shape) -> np.ndarray:
    """Piecewise-constant image: a bright rectangle and a mid-gray disk on a dark field."""
    rows, cols = np.mgrid[0:shape.nrow, 0:shape.ncol]
    image = np.full(shape.frame_dims, 0.2)
    image[shape.nrow // 6:shape.nrow // 2, shape.ncol // 6:(2 * shape.ncol) // 3] = 0.8
    radius = min(shape.nrow, shape.ncol) / 5.0
    centre_r, centre_c = 0.68 * shape.nrow, 0.62 * shape.ncol
    image[(rows - centre_r) ** 2 + (cols - centre_c) ** 2 <= radius ** 2] = 0.5
    if shape.ndim == 2:
        return image
    return np.repeat(image[:, :, np.newaxis], shape.nframe, axis=2)


def make_phantom(name: Optional[str], shape: Shape) -> np.ndarray:
    """Phantom by name; None picks the moving square for videos and the cartoon for images."""
    if name is None:
        name = "moving_square" if shape.ndim == 3 else "cartoon"
    key = name.lower().replace("-", "_")
    if key == "moving_square":
        return moving_square(shape)
    if key == "cartoon":
        return cartoon(shape)
    raise ConfigError(f"unknown phantom {name!r}; valid: {', '.join(PHANTOMS)}")


def add_noise(y: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """y + ε with ε ~ N(0, σ²) per sample."""
    if sigma < 0:
        raise DomainError(f"noise sigma must be >= 0, got {sigma}")
    y = np.array(y, dtype=np.float64)
    if sigma == 0:
        return y
    return y + rng.normal(0.0, sigma, size=y.shape)
