"""
Linear forward operators A with their adjoints.

Every operator maps a ``domain_shape`` volume to a ``range_shape`` volume and
advertises optional closed forms: ``has_normal_solve`` for (I + γAᵀA)⁻¹b and
``has_gram_diag`` when AAᵀ is diagonal. Solvers look at the flags, never at
the concrete class.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import ndimage

from ..models.volume import Shape
from .errors import DomainError, ShapeMismatchError
from .tensor import check_shape, inner, norm2, norm2_sq, unvectorize, vectorize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlurKernel:
    """Small 2D convolution kernel with odd extents."""
    taps: np.ndarray
    normalization: float = field(init=False)

    def __post_init__(self):
        """Validate taps and record their sum."""
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 2:
            raise DomainError(f"kernel taps must be 2D, got ndim={taps.ndim}")
        if taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
            raise DomainError(f"kernel extents must be odd, got {taps.shape}")
        if not np.all(np.isfinite(taps)):
            raise DomainError("kernel taps must be finite")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "normalization", float(taps.sum()))

    @property
    def shape(self):
        """Tap extents."""
        return self.taps.shape

    @classmethod
    def delta(cls) -> 'BlurKernel':
        """3x3 identity kernel."""
        taps = np.zeros((3, 3))
        taps[1, 1] = 1.0
        return cls(taps)

    @classmethod
    def box(cls, size: int) -> 'BlurKernel':
        """Normalized size x size box kernel."""
        return cls(np.full((size, size), 1.0 / (size * size)))

    @classmethod
    def gaussian(cls, std: float, radius: Optional[int] = None) -> 'BlurKernel':
        """Normalized Gaussian kernel truncated at ``radius`` (default 3 std)."""
        if std <= 0:
            raise DomainError(f"gaussian kernel std must be positive, got {std}")
        if radius is None:
            radius = max(1, int(math.ceil(3.0 * std)))
        offsets = np.arange(-radius, radius + 1, dtype=np.float64)
        profile = np.exp(-0.5 * (offsets / std) ** 2)
        taps = np.outer(profile, profile)
        return cls(taps / taps.sum())

    @classmethod
    def from_spec(cls, spec: str) -> 'BlurKernel':
        """Build a kernel from ``delta``, ``box:<size>`` or ``gaussian:<std>``."""
        name, _, arg = spec.partition(":")
        name = name.strip().lower()
        try:
            if name == "delta":
                return cls.delta()
            if name == "box":
                return cls.box(int(arg or 3))
            if name == "gaussian":
                return cls.gaussian(float(arg or 1.0))
        except ValueError as exc:
            raise DomainError(f"invalid kernel spec {spec!r}: {exc}") from exc
        raise DomainError(f"unknown kernel spec {spec!r}; use delta, box:<n> or gaussian:<std>")

    def normalized(self) -> 'BlurKernel':
        """Kernel scaled to unit sum."""
        if self.normalization == 0:
            raise DomainError("cannot normalize a zero-sum kernel")
        return BlurKernel(self.taps / self.normalization)

    def to_dict(self) -> Dict:
        """Convert kernel to dictionary representation."""
        return {"taps": self.taps.tolist(), "normalization": self.normalization}


class LinearOperator(ABC):
    """Forward/adjoint pair with shape metadata."""

    has_normal_solve: bool = False
    has_gram_diag: bool = False

    def __init__(self, domain_shape: Shape, range_shape: Shape, name: str = ""):
        self.domain_shape = domain_shape
        self.range_shape = range_shape
        self.name = name or type(self).__name__

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Evaluate A x."""
        check_shape(x, self.domain_shape, f"{self.name}.apply input")
        return self._apply(x)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """Evaluate Aᵀ y."""
        check_shape(y, self.range_shape, f"{self.name}.adjoint input")
        return self._adjoint(y)

    def normal_solve(self, b: np.ndarray, gamma: float) -> np.ndarray:
        """Closed-form (I + γAᵀA)⁻¹ b; only when ``has_normal_solve``."""
        if not self.has_normal_solve:
            raise NotImplementedError(f"{self.name} has no closed-form normal solve")
        check_shape(b, self.domain_shape, f"{self.name}.normal_solve input")
        if gamma < 0:
            raise DomainError(f"normal solve needs gamma >= 0, got {gamma}")
        return self._normal_solve(b, gamma)

    def gram_diagonal(self) -> np.ndarray:
        """Diagonal of AAᵀ as a range-shaped volume; only when ``has_gram_diag``."""
        if not self.has_gram_diag:
            raise NotImplementedError(f"{self.name} has no diagonal Gram matrix")
        return self._gram_diagonal()

    def gap_project(self, theta: np.ndarray, y_eff: np.ndarray) -> np.ndarray:
        """θ + Aᵀ(AAᵀ)⁻¹(y_eff − Aθ) through the diagonal Gram matrix."""
        diag = self.gram_diagonal()
        zeros = np.flatnonzero(vectorize(diag) == 0)
        if zeros.size:
            raise DomainError(
                f"{self.name}: AAᵀ has a zero diagonal entry at measurement index {int(zeros[0])} "
                f"({zeros.size} in total); no measurement covers those samples"
            )
        return theta + self.adjoint((y_eff - self.apply(theta)) / diag)

    @property
    def T(self) -> 'LinearOperator':
        """The adjoint as an operator."""
        return AdjointOperator(self)

    @abstractmethod
    def _apply(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _adjoint(self, y: np.ndarray) -> np.ndarray:
        pass

    def _normal_solve(self, b: np.ndarray, gamma: float) -> np.ndarray:
        raise NotImplementedError

    def _gram_diagonal(self) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    def __repr__(self) -> str:
        return f"{self.name}({self.domain_shape} -> {self.range_shape})"


class AdjointOperator(LinearOperator):
    """Aᵀ wrapped as an operator in its own right."""

    def __init__(self, op: LinearOperator):
        super().__init__(op.range_shape, op.domain_shape, f"{op.name}.T")
        self.op = op

    def _apply(self, x):
        return self.op.adjoint(x)

    def _adjoint(self, y):
        return self.op.apply(y)


class IdentityOperator(LinearOperator):
    """A = I (denoising)."""

    has_normal_solve = True
    has_gram_diag = True

    def __init__(self, shape: Shape):
        super().__init__(shape, shape, "identity")

    def _apply(self, x):
        return np.array(x, dtype=np.float64)

    def _adjoint(self, y):
        return np.array(y, dtype=np.float64)

    def _normal_solve(self, b, gamma):
        return b / (1.0 + gamma)

    def _gram_diagonal(self):
        return np.ones(self.range_shape.dims)


class MaskOperator(LinearOperator):
    """A = S, a 0/1 diagonal sampling matrix (inpainting)."""

    has_normal_solve = True
    has_gram_diag = True

    def __init__(self, mask: np.ndarray):
        mask = np.array(mask, dtype=np.float64)
        if not np.all((mask == 0) | (mask == 1)):
            bad = int(np.flatnonzero(~((vectorize(mask) == 0) | (vectorize(mask) == 1)))[0])
            raise DomainError(f"mask must be binary; sample {bad} is not 0 or 1")
        shape = Shape.of(mask)
        super().__init__(shape, shape, "mask")
        mask.setflags(write=False)
        self.mask = mask

    @property
    def sampling_rate(self) -> float:
        """Fraction of sampled pixels."""
        return float(self.mask.mean())

    def _apply(self, x):
        return self.mask * x

    def _adjoint(self, y):
        return self.mask * y

    def _normal_solve(self, b, gamma):
        return b / (1.0 + gamma * self.mask)

    def _gram_diagonal(self):
        return self.mask.copy()


def _frame_kernel(kernel: BlurKernel, ndim: int) -> np.ndarray:
    """Kernel taps shaped to act on each frame of an ``ndim`` volume."""
    taps = kernel.taps
    return taps if ndim == 2 else taps[:, :, np.newaxis]


class ConvolutionOperator(LinearOperator):
    """Circular 2D convolution with a blur kernel, frame by frame (deblur)."""

    has_normal_solve = True

    def __init__(self, kernel: BlurKernel, shape: Shape):
        krows, kcols = kernel.shape
        if krows > shape.nrow or kcols > shape.ncol:
            raise ShapeMismatchError("kernel larger than image", shape.frame_dims, kernel.shape)
        super().__init__(shape, shape, "conv")
        self.kernel = kernel
        self._taps = _frame_kernel(kernel, shape.ndim)
        self._symbol_sq = self._transfer_power(kernel, shape)

    @staticmethod
    def _transfer_power(kernel: BlurKernel, shape: Shape) -> np.ndarray:
        """|K̂|² on the image grid (the symbol of AᵀA)."""
        padded = np.zeros(shape.frame_dims)
        krows, kcols = kernel.shape
        padded[:krows, :kcols] = kernel.taps
        return np.abs(np.fft.fft2(padded)) ** 2

    def _apply(self, x):
        return ndimage.convolve(x, self._taps, mode="wrap")

    def _adjoint(self, y):
        return ndimage.correlate(y, self._taps, mode="wrap")

    def _normal_solve(self, b, gamma):
        denom = 1.0 + gamma * self._symbol_sq
        if b.ndim == 3:
            denom = denom[:, :, np.newaxis]
        spectrum = np.fft.fft2(b, axes=(0, 1)) / denom
        return np.real(np.fft.ifft2(spectrum, axes=(0, 1)))


class SubsampleOperator(LinearOperator):
    """Keep every ``factor``-th row and column of each frame (S)."""

    has_gram_diag = True

    def __init__(self, hi_shape: Shape, factor: int):
        if factor < 1:
            raise DomainError(f"subsampling factor must be >= 1, got {factor}")
        if hi_shape.nrow % factor or hi_shape.ncol % factor:
            raise ShapeMismatchError(f"extents not divisible by factor {factor}",
                                     "multiples of factor", hi_shape.frame_dims)
        lo = _decimated_shape(hi_shape, factor)
        super().__init__(hi_shape, lo, "subsample")
        self.factor = factor

    def _apply(self, x):
        f = self.factor
        return np.ascontiguousarray(x[::f, ::f])

    def _adjoint(self, y):
        f = self.factor
        out = np.zeros(self.domain_shape.dims)
        out[::f, ::f] = y
        return out

    def _gram_diagonal(self):
        return np.ones(self.range_shape.dims)


def _decimated_shape(hi_shape: Shape, factor: int) -> Shape:
    rows, cols = hi_shape.nrow // factor, hi_shape.ncol // factor
    if hi_shape.ndim == 2:
        return Shape.image(rows, cols)
    return Shape.video(rows, cols, hi_shape.nframe)


class SuperResolutionOperator(LinearOperator):
    """A = SB: circular blur followed by decimation."""

    def __init__(self, kernel: BlurKernel, hi_shape: Shape, factor: int):
        if factor < 1:
            raise DomainError(f"superresolution factor must be >= 1, got {factor}")
        if hi_shape.nrow % factor or hi_shape.ncol % factor:
            raise ShapeMismatchError(f"extents not divisible by factor {factor}",
                                     "multiples of factor", hi_shape.frame_dims)
        super().__init__(hi_shape, _decimated_shape(hi_shape, factor), "superres")
        self.blur = ConvolutionOperator(kernel, hi_shape)
        self.factor = factor

    def _apply(self, x):
        f = self.factor
        return np.ascontiguousarray(self.blur.apply(x)[::f, ::f])

    def _adjoint(self, y):
        f = self.factor
        upsampled = np.zeros(self.domain_shape.dims)
        upsampled[::f, ::f] = y
        return self.blur.adjoint(upsampled)


class ComposedOperator(LinearOperator):
    """outer ∘ inner, with no closed forms assumed."""

    def __init__(self, outer: LinearOperator, inner: LinearOperator):
        if inner.range_shape != outer.domain_shape:
            raise ShapeMismatchError("composition chain mismatch",
                                     outer.domain_shape.dims, inner.range_shape.dims)
        super().__init__(inner.domain_shape, outer.range_shape, f"{outer.name}*{inner.name}")
        self.outer = outer
        self.inner = inner

    def _apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def _adjoint(self, y):
        return self.inner.adjoint(self.outer.adjoint(y))


class ScaledOperator(LinearOperator):
    """c · A, keeping A's closed forms."""

    def __init__(self, op: LinearOperator, factor: float):
        super().__init__(op.domain_shape, op.range_shape, f"{factor:g}*{op.name}")
        self.op = op
        self.factor = float(factor)
        self.has_normal_solve = op.has_normal_solve
        self.has_gram_diag = op.has_gram_diag

    def _apply(self, x):
        return self.factor * self.op.apply(x)

    def _adjoint(self, y):
        return self.factor * self.op.adjoint(y)

    def _normal_solve(self, b, gamma):
        return self.op.normal_solve(b, gamma * self.factor ** 2)

    def _gram_diagonal(self):
        return self.factor ** 2 * self.op.gram_diagonal()


class MatrixOperator(LinearOperator):
    """Operator backed by an explicit dense matrix on vectorized volumes."""

    def __init__(self, matrix: np.ndarray, domain_shape: Shape, range_shape: Shape):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.shape != (range_shape.size, domain_shape.size):
            raise ShapeMismatchError("matrix does not match shapes",
                                     (range_shape.size, domain_shape.size), matrix.shape)
        super().__init__(domain_shape, range_shape, "matrix")
        matrix.setflags(write=False)
        self.matrix = matrix

    def _apply(self, x):
        return unvectorize(self.matrix @ vectorize(x), self.range_shape)

    def _adjoint(self, y):
        return unvectorize(self.matrix.T @ vectorize(y), self.domain_shape)


class GradientOperator(LinearOperator):
    """Forward differences with circular boundary, per frame.

    The range stacks all row differences, then all column differences, along
    the frame axis: (nrow, ncol, 2 * nframe).
    """

    def __init__(self, shape: Shape):
        super().__init__(shape, shape.with_frames(2 * shape.nframe), "gradient")

    def _apply(self, x):
        d_row = np.roll(x, -1, axis=0) - x
        d_col = np.roll(x, -1, axis=1) - x
        if x.ndim == 2:
            return np.stack([d_row, d_col], axis=2)
        return np.concatenate([d_row, d_col], axis=2)

    def _adjoint(self, y):
        nframe = self.domain_shape.nframe
        p_row, p_col = y[:, :, :nframe], y[:, :, nframe:]
        out = (np.roll(p_row, 1, axis=0) - p_row) + (np.roll(p_col, 1, axis=1) - p_col)
        if self.domain_shape.ndim == 2:
            return out[:, :, 0]
        return out


class SpatioTemporalGradientOperator(LinearOperator):
    """Circular spatial differences plus a forward temporal difference.

    The temporal difference is x[k+1] − x[k] and zero on the last frame (no
    wrap in time). The range stacks row, column and temporal differences:
    (nrow, ncol, 3 * nframe).
    """

    def __init__(self, shape: Shape):
        if shape.ndim != 3:
            raise ShapeMismatchError("spatio-temporal gradient needs a video", "3D", shape.dims)
        super().__init__(shape, shape.with_frames(3 * shape.nframe), "st_gradient")
        self._spatial = GradientOperator(shape)

    def _apply(self, x):
        d_time = np.zeros_like(x)
        d_time[:, :, :-1] = x[:, :, 1:] - x[:, :, :-1]
        return np.concatenate([self._spatial.apply(x), d_time], axis=2)

    def _adjoint(self, y):
        nframe = self.domain_shape.nframe
        p_time = y[:, :, 2 * nframe:]
        out = self._spatial.adjoint(y[:, :, :2 * nframe])
        out[:, :, 1:] += p_time[:, :, :-1]
        out[:, :, :-1] -= p_time[:, :, :-1]
        return out


def apply(op: LinearOperator, x: np.ndarray) -> np.ndarray:
    """Evaluate A x."""
    return op.apply(x)


def adjoint(op: LinearOperator, y: np.ndarray) -> np.ndarray:
    """Evaluate Aᵀ y."""
    return op.adjoint(y)


def make_identity(shape: Shape) -> IdentityOperator:
    """Identity operator on ``shape``."""
    return IdentityOperator(shape)


def make_mask(mask: np.ndarray) -> MaskOperator:
    """Inpainting operator for a binary mask."""
    return MaskOperator(mask)


def make_conv(kernel: BlurKernel, shape: Shape, boundary: str = "circular") -> ConvolutionOperator:
    """Circular convolution operator."""
    if boundary != "circular":
        raise DomainError(f"only circular boundaries are supported, got {boundary!r}")
    return ConvolutionOperator(kernel, shape)


def make_subsample(hi_shape: Shape, factor: int) -> SubsampleOperator:
    """Decimation operator S."""
    return SubsampleOperator(hi_shape, factor)


def make_superres(kernel: BlurKernel, hi_shape: Shape, factor: int) -> SuperResolutionOperator:
    """Blur-then-decimate operator SB."""
    return SuperResolutionOperator(kernel, hi_shape, factor)


def compose(outer: LinearOperator, inner: LinearOperator) -> ComposedOperator:
    """outer ∘ inner."""
    return ComposedOperator(outer, inner)


def scale(op: LinearOperator, factor: float) -> ScaledOperator:
    """factor · op."""
    return ScaledOperator(op, factor)


def make_matrix(matrix: np.ndarray, domain_shape: Shape, range_shape: Shape) -> MatrixOperator:
    """Dense-matrix operator."""
    return MatrixOperator(matrix, domain_shape, range_shape)


def make_gradient(shape: Shape, temporal: bool = False) -> LinearOperator:
    """Discrete gradient D; ``temporal`` adds the frame-axis difference."""
    if temporal:
        return SpatioTemporalGradientOperator(shape)
    return GradientOperator(shape)


def adjoint_mismatch(op: LinearOperator, x: np.ndarray, y: np.ndarray) -> float:
    """|⟨Ax, y⟩ − ⟨x, Aᵀy⟩| / (‖Ax‖·‖y‖ + 1)."""
    ax = op.apply(x)
    lhs = inner(ax, y)
    rhs = inner(x, op.adjoint(y))
    return abs(lhs - rhs) / (norm2(ax) * norm2(y) + 1.0)


def power_iteration_norm(op: LinearOperator, iters: int = 100, seed: int = 0) -> float:
    """Estimate the largest eigenvalue of AᵀA (‖A‖²) by power iteration."""
    if iters < 1:
        raise DomainError(f"power iteration needs iters >= 1, got {iters}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.domain_shape.dims)
    v /= norm2(v)
    estimate = 0.0
    for _ in range(iters):
        av = op.apply(v)
        estimate = norm2_sq(av)
        w = op.adjoint(av)
        w_norm = norm2(w)
        if w_norm == 0:
            return 0.0
        v = w / w_norm
    logger.debug(f"power iteration on {op.name}: {estimate:.6g} after {iters} iterations")
    return estimate
