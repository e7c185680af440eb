"""
Dense volume arithmetic, norms and image-quality metrics.

Volumes are float64 numpy arrays of shape (nrow, ncol) or (nrow, ncol, nframe).
Their vectorized form is row-major with the frame index slowest, so a 3D
volume flattens to [frame_0, frame_1, ...].
"""

import math
from enum import Enum
from typing import Union

import numpy as np

from ..models.volume import Shape
from .errors import DomainError, ShapeMismatchError

# Reported by psnr() for identical inputs.
PSNR_INFINITY = math.inf


class ElementwiseKind(Enum):
    """Supported elementwise binary operations."""
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"


def as_volume(data, copy: bool = True) -> np.ndarray:
    """Validate ``data`` as a finite 2D/3D float64 volume."""
    if copy:
        array = np.array(data, dtype=np.float64, order="C")
    else:
        array = np.ascontiguousarray(data, dtype=np.float64)
    if array.ndim not in (2, 3):
        raise ShapeMismatchError(f"volumes are 2D or 3D, got ndim={array.ndim}")
    Shape.of(array)
    ensure_finite(array, "volume")
    return array


def ensure_finite(volume: np.ndarray, what: str = "volume") -> np.ndarray:
    """Raise DomainError if ``volume`` holds NaN or Inf."""
    if not np.all(np.isfinite(volume)):
        bad = int(np.flatnonzero(~np.isfinite(vectorize(volume)))[0])
        raise DomainError(f"{what} has a non-finite sample at vectorized index {bad}")
    return volume


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    """Raise ShapeMismatchError unless ``a`` and ``b`` share extents."""
    if np.shape(a) != np.shape(b):
        raise ShapeMismatchError(f"{what} shape mismatch", np.shape(a), np.shape(b))


def check_shape(volume: np.ndarray, shape: Shape, what: str = "volume") -> None:
    """Raise ShapeMismatchError unless ``volume`` has the given shape."""
    if np.shape(volume) != shape.dims:
        raise ShapeMismatchError(f"{what} shape mismatch", shape.dims, np.shape(volume))


def vectorize(volume: np.ndarray) -> np.ndarray:
    """Flatten a volume in row-major, frame-slowest order."""
    volume = np.asarray(volume)
    if volume.ndim == 3:
        return np.ascontiguousarray(np.moveaxis(volume, 2, 0)).ravel()
    return np.ascontiguousarray(volume).ravel()


def unvectorize(vector: np.ndarray, shape: Shape) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.size != shape.size:
        raise ShapeMismatchError("vector length does not match shape", shape.size, vector.size)
    if shape.ndim == 3:
        stacked = vector.reshape(shape.nframe, shape.nrow, shape.ncol)
        return np.ascontiguousarray(np.moveaxis(stacked, 0, 2))
    return vector.reshape(shape.dims).copy()


def elementwise(a: np.ndarray, b: np.ndarray,
                kind: Union[ElementwiseKind, str]) -> np.ndarray:
    """Apply ``kind`` sample by sample."""
    kind = ElementwiseKind(kind)
    check_same_shape(a, b)
    if kind is ElementwiseKind.ADD:
        return np.add(a, b)
    if kind is ElementwiseKind.SUB:
        return np.subtract(a, b)
    if kind is ElementwiseKind.MUL:
        return np.multiply(a, b)
    zeros = np.flatnonzero(vectorize(b) == 0)
    if zeros.size:
        raise DomainError(f"division by zero at vectorized index {int(zeros[0])}")
    return np.divide(a, b)


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean inner product of two same-shape volumes."""
    check_same_shape(a, b)
    return float(np.vdot(a, b))


def norm2_sq(a: np.ndarray) -> float:
    """Squared l2 norm."""
    return float(np.vdot(a, a))


def norm2(a: np.ndarray) -> float:
    """l2 norm."""
    return math.sqrt(norm2_sq(a))


def mse(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Mean squared error between two volumes."""
    check_same_shape(reference, estimate)
    return norm2_sq(np.subtract(reference, estimate)) / np.size(reference)


def psnr(reference: np.ndarray, estimate: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give PSNR_INFINITY."""
    if peak <= 0:
        raise DomainError(f"psnr peak must be positive, got {peak}")
    error = mse(reference, estimate)
    if error == 0:
        return PSNR_INFINITY
    return 10.0 * math.log10(peak * peak / error)


def relative_change(current: np.ndarray, previous: np.ndarray) -> float:
    """||current - previous|| / ||previous|| (absolute change when previous is 0)."""
    diff = norm2(np.subtract(current, previous))
    base = norm2(previous)
    return diff / base if base > 0 else diff
