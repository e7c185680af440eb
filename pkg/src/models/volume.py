"""
Shape model for image and video volumes.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..core.errors import DomainError, ShapeMismatchError


@dataclass(frozen=True)
class Shape:
    """Extents of a 2D image or a 3D frame stack.

    Volumes themselves are plain float64 numpy arrays of shape ``dims``;
    a 2D image has ``nframe == 1`` and ``ndim == 2``.
    """
    nrow: int
    ncol: int
    nframe: int = 1
    ndim: int = 2

    def __post_init__(self):
        """Validate extents."""
        for name in ("nrow", "ncol", "nframe"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise DomainError(f"Shape.{name} must be a positive integer, got {value!r}")
        if self.ndim not in (2, 3):
            raise DomainError(f"Shape.ndim must be 2 or 3, got {self.ndim}")
        if self.ndim == 2 and self.nframe != 1:
            raise DomainError("a 2D shape must have nframe == 1")

    @classmethod
    def image(cls, nrow: int, ncol: int) -> 'Shape':
        """Create a 2D image shape."""
        return cls(int(nrow), int(ncol), 1, 2)

    @classmethod
    def video(cls, nrow: int, ncol: int, nframe: int) -> 'Shape':
        """Create a 3D frame-stack shape."""
        return cls(int(nrow), int(ncol), int(nframe), 3)

    @classmethod
    def from_dims(cls, dims: Tuple[int, ...]) -> 'Shape':
        """Create a shape from a numpy-style extents tuple."""
        if len(dims) == 2:
            return cls.image(*dims)
        if len(dims) == 3:
            return cls.video(*dims)
        raise ShapeMismatchError(f"volumes are 2D or 3D, got extents {tuple(dims)}")

    @classmethod
    def of(cls, array: np.ndarray) -> 'Shape':
        """Shape of a volume array."""
        return cls.from_dims(np.shape(array))

    @property
    def dims(self) -> Tuple[int, ...]:
        """Numpy extents tuple."""
        if self.ndim == 2:
            return (self.nrow, self.ncol)
        return (self.nrow, self.ncol, self.nframe)

    @property
    def frame_dims(self) -> Tuple[int, int]:
        """Extents of a single frame."""
        return (self.nrow, self.ncol)

    @property
    def size(self) -> int:
        """Total element count."""
        return self.nrow * self.ncol * self.nframe

    def with_frames(self, nframe: int) -> 'Shape':
        """Same frame extents with a different frame count (always 3D)."""
        return Shape.video(self.nrow, self.ncol, nframe)

    def __str__(self) -> str:
        return "x".join(str(d) for d in self.dims)

    def to_dict(self) -> Dict:
        """Convert shape to dictionary representation."""
        return {
            "nrow": self.nrow,
            "ncol": self.ncol,
            "nframe": self.nframe,
            "ndim": self.ndim
        }
