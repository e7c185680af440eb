"""
Snapshot compressive imaging: nframe mask-modulated frames summed into one
2D snapshot.

With masks M_k the sensing matrix is A = [D₁, …, D_N] with D_k = diag(vec M_k),
so AAᵀ is diagonal with entries phi_sum = Σ_k M_k². That diagonal gives the
GAP projection and, through the Woodbury identity, the ADMM x-update in
elementwise form.
"""

import logging
from typing import Optional

import numpy as np

from ..models.volume import Shape
from .errors import DomainError, ShapeMismatchError
from .linops import LinearOperator
from .tensor import as_volume, check_same_shape, check_shape

logger = logging.getLogger(__name__)

# Largest problem woodbury_check will materialize.
WOODBURY_MAX_UNKNOWNS = 512


def _check_masks(masks: np.ndarray) -> None:
    if np.ndim(masks) != 3:
        raise ShapeMismatchError("SCI masks must be a 3D (nrow, ncol, nframe) stack",
                                 "3D", np.shape(masks))


def sci_forward(masks: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y = Σ_k M_k ⊙ x_k."""
    _check_masks(masks)
    check_same_shape(masks, x, "masks and video")
    return np.sum(masks * x, axis=2)


def sci_adjoint(masks: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(Aᵀy)_k = M_k ⊙ y."""
    _check_masks(masks)
    if np.shape(y) != np.shape(masks)[:2]:
        raise ShapeMismatchError("measurement does not match mask frames",
                                 np.shape(masks)[:2], np.shape(y))
    return masks * np.asarray(y)[:, :, np.newaxis]


def gram_diagonal(masks: np.ndarray) -> np.ndarray:
    """Per-pixel Σ_k M_k², the diagonal of AAᵀ."""
    _check_masks(masks)
    return np.sum(masks * masks, axis=2)


class SciOperator(LinearOperator):
    """A = [D₁, …, D_N] built from a mask stack."""

    has_normal_solve = True
    has_gram_diag = True

    def __init__(self, masks: np.ndarray):
        masks = as_volume(masks)
        _check_masks(masks)
        nrow, ncol, nframe = masks.shape
        super().__init__(Shape.video(nrow, ncol, nframe), Shape.image(nrow, ncol), "sci")
        masks.setflags(write=False)
        self.masks = masks

        self.phi_sum_raw = gram_diagonal(masks)
        self.phi_sum_raw.setflags(write=False)
        dead = self.phi_sum_raw == 0
        self.zero_diag_count = int(np.count_nonzero(dead))
        # Zero diagonal entries are replaced by 1 for the GAP division.
        phi_sum = np.where(dead, 1.0, self.phi_sum_raw)
        phi_sum.setflags(write=False)
        self.phi_sum = phi_sum
        if self.zero_diag_count:
            logger.warning(
                f"{self.zero_diag_count} of {dead.size} pixels are covered by no mask; "
                "their phi_sum entries were replaced by 1"
            )

    @classmethod
    def from_masks(cls, masks: np.ndarray) -> 'SciOperator':
        """Create an operator from a (nrow, ncol, nframe) mask stack."""
        return cls(masks)

    @property
    def nframe(self) -> int:
        return self.domain_shape.nframe

    @property
    def compression_ratio(self) -> float:
        """Measurements per unknown, 1/nframe."""
        return self.range_shape.size / self.domain_shape.size

    def _apply(self, x):
        return sci_forward(self.masks, x)

    def _adjoint(self, y):
        return sci_adjoint(self.masks, y)

    def _gram_diagonal(self):
        return self.phi_sum_raw.copy()

    def _normal_solve(self, b, gamma):
        # (I + γAᵀA)⁻¹b = b − γAᵀ(I + γAAᵀ)⁻¹Ab
        return b - gamma * self.adjoint(self.apply(b) / (1.0 + gamma * self.phi_sum_raw))

    def gap_project(self, theta, y_eff):
        return sci_gap_x_update(self, theta, y_eff)

    def __repr__(self) -> str:
        return f"SciOperator(masks={self.domain_shape}, zero_diag={self.zero_diag_count})"


def sci_gap_x_update(op: SciOperator, theta: np.ndarray, y_eff: np.ndarray) -> np.ndarray:
    """x = θ + Aᵀ((y_eff − Aθ) ⊘ phi_sum)."""
    check_shape(theta, op.domain_shape, "GAP theta")
    check_shape(y_eff, op.range_shape, "GAP measurement")
    return theta + op.adjoint((y_eff - op.apply(theta)) / op.phi_sum)


def sci_admm_x_update(op: SciOperator, z: np.ndarray, s: np.ndarray, y: np.ndarray,
                      gamma: float) -> np.ndarray:
    """(I + γAᵀA)⁻¹(z − s + γAᵀy) as v + γAᵀ((y − Av) ⊘ (γ·phi_sum + 1)), v = z − s."""
    if gamma <= 0:
        raise DomainError(f"SCI ADMM x-update needs gamma > 0, got {gamma}")
    check_same_shape(z, s, "z and s")
    check_shape(y, op.range_shape, "SCI measurement")
    v = z - s
    return v + gamma * op.adjoint((y - op.apply(v)) / (gamma * op.phi_sum_raw + 1.0))


def woodbury_check(op: SciOperator, gamma: float, sample: np.ndarray,
                   max_unknowns: int = WOODBURY_MAX_UNKNOWNS) -> float:
    """max |(I + γAᵀA)⁻¹p − (I − γAᵀ(I + γAAᵀ)⁻¹A)p| evaluated densely."""
    from .oracle import dense_inverse_normal, dense_woodbury_inverse, materialize
    from .tensor import vectorize

    check_shape(sample, op.domain_shape, "Woodbury sample")
    dense = materialize(op, max_unknowns)
    p = vectorize(sample)
    left = dense_inverse_normal(dense, gamma) @ p
    right = dense_woodbury_inverse(dense, gamma) @ p
    return float(np.max(np.abs(left - right)))


def random_binary_masks(shape: Shape, density: float = 0.5, seed: Optional[int] = 0) -> np.ndarray:
    """Bernoulli(density) 0/1 masks of ``shape`` (always 3D)."""
    if not 0.0 < density <= 1.0:
        raise DomainError(f"mask density must be in (0, 1], got {density}")
    dims = shape.with_frames(shape.nframe).dims
    rng = np.random.default_rng(seed)
    return (rng.random(dims) < density).astype(np.float64)


def make_sci(masks: np.ndarray) -> SciOperator:
    """Create an SCI operator from a mask stack."""
    return SciOperator.from_masks(masks)
