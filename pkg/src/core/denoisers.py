"""
Denoisers D_σ(·) for plug-and-play and RED, plus the RED regularizer.

All denoisers are classical filters behind one interface. σ is on the [0, 1]
sample scale here; the CLI converts from the [0, 255] convention.
"""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy import ndimage

from ..models.volume import Shape
from .errors import ConfigError, ConvergenceError, DomainError
from .linops import BlurKernel, ConvolutionOperator
from .prox import DEFAULT_TV_INNER_ITERS, ProximalMap, ProxKind, TVProx
from .tensor import inner, norm2

logger = logging.getLogger(__name__)

# Symmetric, DC-preserving 3x3 smoother used when no kernel is given.
SMOOTHING_TAPS = np.array([[0.0, 0.1, 0.0],
                           [0.1, 0.6, 0.1],
                           [0.0, 0.1, 0.0]])


class DenoiserKind(Enum):
    """Available denoiser families."""
    GAUSSIAN_FILTER = "gaussian_filter"
    TV_DENOISER = "tv_denoiser"
    MEDIAN_FILTER = "median_filter"
    LINEAR_SYMMETRIC = "linear_symmetric"
    PROX_ADAPTER = "prox_adapter"


def _check_sigma(sigma: float) -> float:
    if not sigma >= 0:
        raise DomainError(f"denoiser strength sigma must be >= 0, got {sigma}")
    return float(sigma)


class Denoiser(ABC):
    """Mapping (v, σ) ↦ v̂ with v̂.shape == v.shape."""

    kind: DenoiserKind
    is_linear: bool = False

    def denoise(self, v: np.ndarray, sigma: float) -> np.ndarray:
        """Denoise ``v`` at strength ``sigma``."""
        sigma = _check_sigma(sigma)
        return self._denoise(np.asarray(v, dtype=np.float64), sigma)

    def __call__(self, v: np.ndarray, sigma: float) -> np.ndarray:
        return self.denoise(v, sigma)

    @abstractmethod
    def _denoise(self, v: np.ndarray, sigma: float) -> np.ndarray:
        pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind.value})"


def _per_frame(v: np.ndarray, value, frame_value):
    """Per-axis filter parameter that never mixes frames."""
    return (value, value) if v.ndim == 2 else (value, value, frame_value)


class GaussianFilterDenoiser(Denoiser):
    """Circular Gaussian blur with std = width·σ pixels, truncated at 3 std."""

    kind = DenoiserKind.GAUSSIAN_FILTER
    is_linear = True

    def __init__(self, width: float = 1.0):
        if width <= 0:
            raise DomainError(f"gaussian denoiser width must be positive, got {width}")
        self.width = float(width)

    def _denoise(self, v, sigma):
        std = self.width * sigma
        if std == 0:
            return v.copy()
        return ndimage.gaussian_filter(v, sigma=_per_frame(v, std, 0.0), mode="wrap", truncate=3.0)


class TVDenoiser(Denoiser):
    """TV prox used as a denoiser, with σ as the TV weight."""

    kind = DenoiserKind.TV_DENOISER

    def __init__(self, inner_iters: int = DEFAULT_TV_INNER_ITERS, isotropic: bool = True):
        self.prox = TVProx(isotropic=isotropic, inner_iters=inner_iters)

    def _denoise(self, v, sigma):
        return self.prox(v, sigma)


class MedianFilterDenoiser(Denoiser):
    """Circular median filter over a size x size window; σ only switches it off at 0."""

    kind = DenoiserKind.MEDIAN_FILTER

    def __init__(self, size: int = 3):
        if size < 1:
            raise DomainError(f"median window must be >= 1, got {size}")
        self.size = int(size)

    def _denoise(self, v, sigma):
        if sigma == 0:
            return v.copy()
        return ndimage.median_filter(v, size=_per_frame(v, self.size, 1), mode="wrap")


class LinearSymmetricDenoiser(Denoiser):
    """f(v) = Wv for a fixed symmetric circular convolution W; σ is ignored.

    W is symmetric when the kernel is point-symmetric, which makes the RED
    gradient rule hold exactly.
    """

    kind = DenoiserKind.LINEAR_SYMMETRIC
    is_linear = True

    def __init__(self, kernel: Optional[Union[BlurKernel, np.ndarray]] = None):
        if kernel is None:
            kernel = BlurKernel(SMOOTHING_TAPS)
        elif not isinstance(kernel, BlurKernel):
            kernel = BlurKernel(kernel)
        if not np.array_equal(kernel.taps, kernel.taps[::-1, ::-1]):
            raise DomainError("linear_symmetric denoiser needs a point-symmetric kernel")
        self.kernel = kernel
        self._operators: Dict[Shape, ConvolutionOperator] = {}

    def operator(self, shape: Shape) -> ConvolutionOperator:
        """W as a linear operator on ``shape``."""
        if shape not in self._operators:
            self._operators[shape] = ConvolutionOperator(self.kernel, shape)
        return self._operators[shape]

    @property
    def center_tap(self) -> float:
        """Diagonal entry of W, i.e. trace(W)/n."""
        rows, cols = self.kernel.shape
        return float(self.kernel.taps[rows // 2, cols // 2])

    def _denoise(self, v, sigma):
        return self.operator(Shape.of(v)).apply(v)


class ProxDenoiser(Denoiser):
    """D_σ(v) = prox_{weight·σ·r}(v)."""

    kind = DenoiserKind.PROX_ADAPTER

    def __init__(self, prox: ProximalMap, weight: float = 1.0):
        self.prox = prox
        self.weight = float(weight)
        self.is_linear = prox.kind is ProxKind.L2SQ

    def _denoise(self, v, sigma):
        return self.prox(v, self.weight * sigma)


class DenoiserProx(ProximalMap):
    """A denoiser standing in for prox_{τr}: D_σ with σ fixed, or σ = τ."""

    kind = ProxKind.DENOISER_ADAPTER

    def __init__(self, denoiser: Denoiser, sigma: Optional[float] = None):
        self.denoiser = denoiser
        self.sigma = None if sigma is None else _check_sigma(sigma)

    def _prox(self, z, tau):
        return self.denoiser(z, tau if self.sigma is None else self.sigma)


def denoise(d: Denoiser, v: np.ndarray, sigma: float) -> np.ndarray:
    """D_σ(v)."""
    return d.denoise(v, sigma)


def red_regularizer_value(d: Denoiser, x: np.ndarray, lam: float, sigma: float = 0.0) -> float:
    """(λ/2)·xᵀ(x − f(x))."""
    if lam < 0:
        raise DomainError(f"RED lambda must be >= 0, got {lam}")
    return 0.5 * lam * inner(x, x - d(x, sigma))


def red_gradient(d: Denoiser, x: np.ndarray, lam: float, sigma: float = 0.0) -> np.ndarray:
    """λ·(x − f(x))."""
    if lam < 0:
        raise DomainError(f"RED lambda must be >= 0, got {lam}")
    return lam * (x - d(x, sigma))


def local_homogeneity_defect(d: Denoiser, x: np.ndarray, eps: float, sigma: float = 0.0) -> float:
    """‖(1+ε)f(x) − f((1+ε)x)‖ / ‖f(x)‖."""
    if not 0 < abs(eps) <= 1e-2:
        raise DomainError(f"homogeneity eps must satisfy 0 < |eps| <= 1e-2, got {eps}")
    fx = d(x, sigma)
    base = norm2(fx)
    if base == 0:
        raise DomainError("denoiser output is zero; homogeneity defect undefined")
    return norm2((1.0 + eps) * fx - d((1.0 + eps) * x, sigma)) / base


def monte_carlo_divergence(d: Denoiser, v: np.ndarray, sigma: float,
                           rng: np.random.Generator, max_tries: int = 3) -> float:
    """Single-sample estimate of div D_σ(v) = Σ_i ∂D_i/∂v_i.

    Uses a Rademacher vector b and the difference bᵀ(D(v + εb) − D(v))/ε.
    A non-finite estimate is retried with a fresh draw.
    """
    v = np.asarray(v, dtype=np.float64)
    eps = max(float(np.max(np.abs(v))) / 1000.0, 1e-6)
    base = d(v, sigma)
    for attempt in range(1, max_tries + 1):
        b = rng.choice(np.array([-1.0, 1.0]), size=v.shape)
        estimate = inner(b, d(v + eps * b, sigma) - base) / eps
        if np.isfinite(estimate):
            return float(estimate)
        logger.warning(f"divergence draw {attempt}/{max_tries} gave a non-finite estimate")
    raise ConvergenceError(f"divergence estimator failed after {max_tries} draws")


def _linear_kernel(kernel=None, **_) -> LinearSymmetricDenoiser:
    if isinstance(kernel, str):
        kernel = BlurKernel.from_spec(kernel)
    return LinearSymmetricDenoiser(kernel)


DENOISER_FACTORIES: Dict[str, Callable[..., Denoiser]] = {
    "gaussian_filter": lambda width=1.0, **_: GaussianFilterDenoiser(width),
    "tv_denoiser": lambda inner_iters=DEFAULT_TV_INNER_ITERS, **_: TVDenoiser(inner_iters),
    "median_filter": lambda size=3, **_: MedianFilterDenoiser(size),
    "linear_symmetric": _linear_kernel,
    "identity": lambda **_: LinearSymmetricDenoiser(BlurKernel.delta()),
}
DENOISER_ALIASES = {"gaussian": "gaussian_filter", "tv": "tv_denoiser", "median": "median_filter"}


def make_denoiser(name: str, **params) -> Denoiser:
    """Build a denoiser by name."""
    key = DENOISER_ALIASES.get(name.lower(), name.lower())
    try:
        factory = DENOISER_FACTORIES[key]
    except KeyError:
        valid = sorted(set(DENOISER_FACTORIES) | set(DENOISER_ALIASES))
        raise ConfigError(f"unknown denoiser {name!r}; valid: {', '.join(valid)}")
    return factory(**params)
