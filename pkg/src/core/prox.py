"""
Proximal operators prox_{τr}(z) = argmin_x ½‖x − z‖² + τ r(x).

A ProximalMap holds only the shape of r; the weight τ is passed at call time
and is always the full product of solver step and regularization weight.
"""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np

from ..models.volume import Shape
from .errors import ConfigError, DomainError, ShapeMismatchError
from .linops import GradientOperator, LinearOperator, SpatioTemporalGradientOperator
from .tensor import norm2_sq

logger = logging.getLogger(__name__)

DEFAULT_TV_INNER_ITERS = 30
TV_DUAL_STEP = 1.0 / 8.0
TV_ST_DUAL_STEP = 1.0 / 12.0


class ProxKind(Enum):
    """Regularizers with a proximal map."""
    L1 = "l1"
    L2SQ = "l2sq"
    TV_ISO = "tv_iso"
    TV_ANISO = "tv_aniso"
    TV_ST_ISO = "tv_st_iso"
    TV_ST_ANISO = "tv_st_aniso"
    NONNEG = "nonneg"
    L21 = "l21"
    DENOISER_ADAPTER = "denoiser_adapter"


def _check_tau(tau: float) -> float:
    if not tau >= 0:
        raise DomainError(f"prox weight tau must be >= 0, got {tau}")
    return float(tau)


class ProximalMap(ABC):
    """Proximal map of a fixed convex regularizer r."""

    kind: ProxKind

    def __call__(self, z: np.ndarray, tau: float) -> np.ndarray:
        """Evaluate prox_{τr}(z)."""
        return self._prox(np.asarray(z, dtype=np.float64), _check_tau(tau))

    @abstractmethod
    def _prox(self, z: np.ndarray, tau: float) -> np.ndarray:
        pass

    def value(self, x: np.ndarray) -> Optional[float]:
        """r(x), or None when r has no closed-form value."""
        return None

    def objective(self, x: np.ndarray, z: np.ndarray, tau: float) -> Optional[float]:
        """½‖x − z‖² + τ r(x)."""
        reg = self.value(x)
        if reg is None:
            return None
        return 0.5 * norm2_sq(np.subtract(x, z)) + tau * reg

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind.value})"


class L1Prox(ProximalMap):
    """Soft thresholding, r(x) = ‖x‖₁."""

    kind = ProxKind.L1

    def _prox(self, z, tau):
        return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)

    def value(self, x):
        return float(np.sum(np.abs(x)))


class L2SqProx(ProximalMap):
    """Shrinkage, r(x) = ½‖x‖²."""

    kind = ProxKind.L2SQ

    def _prox(self, z, tau):
        return z / (1.0 + tau)

    def value(self, x):
        return 0.5 * norm2_sq(x)


class NonnegProx(ProximalMap):
    """Projection onto the nonnegative orthant."""

    kind = ProxKind.NONNEG

    def _prox(self, z, tau):
        return np.maximum(z, 0.0)

    def value(self, x):
        return 0.0 if np.all(np.asarray(x) >= 0) else float("inf")


class L21Prox(ProximalMap):
    """Group soft thresholding on gradient-shaped volumes.

    Input is (nrow, ncol, 2 * nframe) as produced by GradientOperator; each
    pixel's (row difference, column difference) pair forms one group. Its
    conjugate prox is the per-pixel l2-ball projection, which makes it the
    isotropic TV term inside the primal-dual solver.
    """

    kind = ProxKind.L21

    @staticmethod
    def _split(p: np.ndarray):
        if p.ndim != 3 or p.shape[2] % 2:
            raise ShapeMismatchError("l21 prox expects (nrow, ncol, 2*nframe) input",
                                     "even frame count", p.shape)
        half = p.shape[2] // 2
        return p[:, :, :half], p[:, :, half:]

    def _prox(self, z, tau):
        d_row, d_col = self._split(z)
        magnitude = np.sqrt(d_row ** 2 + d_col ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            shrink = np.where(magnitude > tau, 1.0 - tau / magnitude, 0.0)
        return z * np.concatenate([shrink, shrink], axis=2)

    def value(self, x):
        d_row, d_col = self._split(np.asarray(x))
        return float(np.sum(np.sqrt(d_row ** 2 + d_col ** 2)))


class TVProx(ProximalMap):
    """Total-variation prox by projected gradient on the dual.

    Solves min_q ½‖z − Dᵀq‖² over the dual ball of radius τ (per-pixel l2 ball
    for isotropic TV, box for anisotropic) and returns x = z − Dᵀq. D is the
    circular forward-difference gradient, per frame, with dual step 1/8. With
    ``temporal`` set, videos use the spatio-temporal gradient instead (one
    more difference along the frame axis, dual step 1/12) and the isotropic
    ball couples all three differences of a pixel.
    """

    def __init__(self, isotropic: bool = True, inner_iters: int = DEFAULT_TV_INNER_ITERS,
                 temporal: bool = False):
        if inner_iters < 1:
            raise DomainError(f"TV prox needs inner_iters >= 1, got {inner_iters}")
        self.isotropic = isotropic
        self.temporal = temporal
        self.inner_iters = int(inner_iters)
        if temporal:
            self.kind = ProxKind.TV_ST_ISO if isotropic else ProxKind.TV_ST_ANISO
        else:
            self.kind = ProxKind.TV_ISO if isotropic else ProxKind.TV_ANISO
        self._gradients: Dict[Shape, LinearOperator] = {}

    def _gradient(self, shape: Shape) -> LinearOperator:
        if shape not in self._gradients:
            if self.temporal and shape.ndim == 3:
                self._gradients[shape] = SpatioTemporalGradientOperator(shape)
            else:
                self._gradients[shape] = GradientOperator(shape)
        return self._gradients[shape]

    @staticmethod
    def _components(grad: LinearOperator) -> int:
        return 3 if isinstance(grad, SpatioTemporalGradientOperator) else 2

    @staticmethod
    def _magnitude(q: np.ndarray, parts: int) -> np.ndarray:
        return np.sqrt(sum(c ** 2 for c in np.split(q, parts, axis=2)))

    def _project(self, q: np.ndarray, tau: float, parts: int) -> np.ndarray:
        if not self.isotropic:
            return np.clip(q, -tau, tau)
        scale = np.maximum(1.0, self._magnitude(q, parts) / tau)
        return q / np.concatenate([scale] * parts, axis=2)

    def _prox(self, z, tau):
        if tau == 0:
            return z.copy()
        grad = self._gradient(Shape.of(z))
        parts = self._components(grad)
        step = TV_DUAL_STEP if parts == 2 else TV_ST_DUAL_STEP
        q = np.zeros(grad.range_shape.dims)
        for _ in range(self.inner_iters):
            x = z - grad.adjoint(q)
            q = self._project(q + step * grad.apply(x), tau, parts)
        return z - grad.adjoint(q)

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        grad = self._gradient(Shape.of(x))
        d = grad.apply(x)
        if self.isotropic:
            return float(np.sum(self._magnitude(d, self._components(grad))))
        return float(np.sum(np.abs(d)))

    def __repr__(self) -> str:
        return f"TVProx(kind={self.kind.value}, inner_iters={self.inner_iters})"


def prox_l1(z: np.ndarray, tau: float) -> np.ndarray:
    """sign(z)·max(|z| − τ, 0)."""
    return L1Prox()(z, tau)


def prox_l2sq(z: np.ndarray, tau: float) -> np.ndarray:
    """z / (1 + τ)."""
    return L2SqProx()(z, tau)


def prox_tv(z: np.ndarray, tau: float, inner_iters: int = DEFAULT_TV_INNER_ITERS,
            isotropic: bool = True, temporal: bool = False) -> np.ndarray:
    """Approximate TV prox, per frame unless ``temporal`` couples the frames."""
    return TVProx(isotropic=isotropic, inner_iters=inner_iters, temporal=temporal)(z, tau)


def prox_nonneg(z: np.ndarray) -> np.ndarray:
    """max(z, 0)."""
    return NonnegProx()(z, 0.0)


def prox_conjugate(p: ProximalMap, x: np.ndarray, sigma: float, tau: float = 1.0) -> np.ndarray:
    """prox of σ·(τr)* by the Moreau identity: x − σ·prox_{(τ/σ)r}(x/σ)."""
    if not sigma > 0:
        raise DomainError(f"conjugate prox needs sigma > 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    return x - sigma * p(x / sigma, tau / sigma)


PROX_FACTORIES: Dict[str, Callable[..., ProximalMap]] = {
    "l1": lambda **_: L1Prox(),
    "l2sq": lambda **_: L2SqProx(),
    "nonneg": lambda **_: NonnegProx(),
    "l21": lambda **_: L21Prox(),
    "tv": lambda inner_iters=DEFAULT_TV_INNER_ITERS, **_: TVProx(True, inner_iters),
    "tv_iso": lambda inner_iters=DEFAULT_TV_INNER_ITERS, **_: TVProx(True, inner_iters),
    "tv_aniso": lambda inner_iters=DEFAULT_TV_INNER_ITERS, **_: TVProx(False, inner_iters),
    "tv_st": lambda inner_iters=DEFAULT_TV_INNER_ITERS, **_: TVProx(True, inner_iters, True),
    "tv_st_aniso": lambda inner_iters=DEFAULT_TV_INNER_ITERS, **_: TVProx(False, inner_iters, True),
}


def make_prox(name: str, **params) -> ProximalMap:
    """Build a proximal map by name."""
    try:
        factory = PROX_FACTORIES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown prox {name!r}; valid: {', '.join(sorted(PROX_FACTORIES))}")
    return factory(**params)
