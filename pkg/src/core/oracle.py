"""
Dense reference computations for tests and the ``verify`` command.

Operators are materialized column by column and the linear algebra is done by
numpy.linalg. Everything here refuses problems above the desk-scale cap.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config.settings import get_settings
from ..models.volume import Shape
from .errors import ConvergenceError, DomainError, SizeError
from .linops import LinearOperator, MatrixOperator
from .tensor import unvectorize, vectorize

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class DenseMatrix:
    """Explicit matrix of an operator acting on vectorized volumes."""
    entries: np.ndarray
    domain_shape: Optional[Shape] = None
    range_shape: Optional[Shape] = None

    def __post_init__(self):
        """Validate entries."""
        entries = np.array(self.entries, dtype=np.float64)
        if entries.ndim != 2:
            raise DomainError(f"dense matrix must be 2D, got ndim={entries.ndim}")
        if not np.all(np.isfinite(entries)):
            raise DomainError("dense matrix entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def T(self) -> 'DenseMatrix':
        """Transpose, with the shapes swapped."""
        return DenseMatrix(self.entries.T, self.range_shape, self.domain_shape)

    def as_operator(self) -> MatrixOperator:
        """Wrap as a LinearOperator."""
        domain = self.domain_shape or Shape.image(self.cols, 1)
        rng = self.range_shape or Shape.image(self.rows, 1)
        return MatrixOperator(self.entries, domain, rng)

    def _to_vector(self, data: np.ndarray) -> np.ndarray:
        return vectorize(data) if np.ndim(data) > 1 else np.asarray(data, dtype=np.float64)

    def _like(self, vector: np.ndarray, template: np.ndarray, shape: Optional[Shape]) -> np.ndarray:
        if np.ndim(template) > 1 and shape is not None:
            return unvectorize(vector, shape)
        return vector


def _cap(max_unknowns: Optional[int]) -> int:
    return max_unknowns if max_unknowns is not None else get_settings().oracle_max_unknowns


def check_desk_scale(size: int, max_unknowns: Optional[int] = None, what: str = "problem") -> None:
    """Raise SizeError when ``size`` exceeds the dense cap."""
    cap = _cap(max_unknowns)
    if size > cap:
        raise SizeError(f"{what} has {size} unknowns; dense oracle is capped at {cap}")


def materialize(op: LinearOperator, max_unknowns: Optional[int] = None) -> DenseMatrix:
    """Column j is vec(A e_j)."""
    n, m = op.domain_shape.size, op.range_shape.size
    check_desk_scale(n, max_unknowns, f"{op.name} domain")
    check_desk_scale(m, max_unknowns, f"{op.name} range")
    entries = np.empty((m, n))
    basis = np.zeros(n)
    for j in range(n):
        basis[j] = 1.0
        entries[:, j] = vectorize(op.apply(unvectorize(basis, op.domain_shape)))
        basis[j] = 0.0
    logger.debug(f"materialized {op.name} as a {m}x{n} matrix")
    return DenseMatrix(entries, op.domain_shape, op.range_shape)


def _solve_checked(system: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    condition = np.linalg.cond(system)
    if not condition < CONDITION_LIMIT:
        raise ConvergenceError(f"{what} is ill-conditioned (condition number {condition:.3g})")
    return np.linalg.solve(system, rhs)


def dense_solve_normal(m: DenseMatrix, gamma: float, b: np.ndarray) -> np.ndarray:
    """Solve (I + γAᵀA)x = b by LU factorization."""
    a = m.entries
    rhs = m._to_vector(b)
    system = np.eye(m.cols) + gamma * (a.T @ a)
    x = _solve_checked(system, rhs, f"I + {gamma:g} AᵀA")
    return m._like(x, b, m.domain_shape)


def dense_least_squares(m: DenseMatrix, y: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of A x ≈ y."""
    x, *_ = np.linalg.lstsq(m.entries, m._to_vector(y), rcond=None)
    return m._like(x, y, m.domain_shape)


def dense_gap_projection(m: DenseMatrix, theta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Euclidean projection of θ onto {x : Ax = y}: θ + A⁺(y − Aθ)."""
    a = m.entries
    t = m._to_vector(theta)
    correction, *_ = np.linalg.lstsq(a, m._to_vector(y) - a @ t, rcond=None)
    return m._like(t + correction, theta, m.domain_shape)


def dense_inverse_normal(m: DenseMatrix, gamma: float) -> np.ndarray:
    """(I + γAᵀA)⁻¹ as an explicit matrix."""
    a = m.entries
    return np.linalg.inv(np.eye(m.cols) + gamma * (a.T @ a))


def dense_woodbury_inverse(m: DenseMatrix, gamma: float) -> np.ndarray:
    """I − γAᵀ(I + γAAᵀ)⁻¹A as an explicit matrix."""
    a = m.entries
    inner = np.linalg.inv(np.eye(m.rows) + gamma * (a @ a.T))
    return np.eye(m.cols) - gamma * (a.T @ inner @ a)


def dense_max_eigenvalue(m: DenseMatrix) -> float:
    """Largest eigenvalue of AᵀA."""
    a = m.entries
    gram = a @ a.T if m.rows <= m.cols else a.T @ a
    return float(np.linalg.eigvalsh(gram)[-1])


def dense_gap_x_update(op: LinearOperator, theta: np.ndarray, y_eff: np.ndarray,
                       max_unknowns: Optional[int] = None) -> np.ndarray:
    """GAP projection for operators without a diagonal Gram matrix."""
    return dense_gap_projection(materialize(op, max_unknowns), theta, y_eff)
