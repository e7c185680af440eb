"""
Shared solver plumbing: the Problem, data-fidelity helpers, the normal-equation
solve and the per-iteration bookkeeping every solver goes through.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator as ScipyLinearOperator
from scipy.sparse.linalg import cg

from ...models.config import SolverConfig
from ...models.trace import IterationRecord, IterationTrace, StopReason
from ..errors import ConvergenceError, DivergenceError
from ..linops import LinearOperator
from ..tensor import as_volume, check_shape, norm2, norm2_sq, psnr, relative_change, unvectorize, vectorize

logger = logging.getLogger(__name__)

Regularizer = Callable[[np.ndarray], Optional[float]]


@dataclass
class Problem:
    """A linear inverse problem y = A x (+ noise)."""
    op: LinearOperator
    measurement: np.ndarray
    init: Optional[np.ndarray] = None
    ground_truth: Optional[np.ndarray] = None

    def __post_init__(self):
        """Validate shapes and finiteness."""
        self.measurement = as_volume(self.measurement)
        check_shape(self.measurement, self.op.range_shape, "measurement")
        if self.init is not None:
            self.init = as_volume(self.init)
            check_shape(self.init, self.op.domain_shape, "init")
        if self.ground_truth is not None:
            self.ground_truth = as_volume(self.ground_truth)
            check_shape(self.ground_truth, self.op.domain_shape, "ground truth")

    @property
    def n(self) -> int:
        """Number of unknowns."""
        return self.op.domain_shape.size

    @property
    def m(self) -> int:
        """Number of measurements."""
        return self.op.range_shape.size

    def initial(self) -> np.ndarray:
        """x⁰: the given init, else Aᵀy."""
        if self.init is not None:
            return self.init.copy()
        return self.op.adjoint(self.measurement)

    def residual(self, x: np.ndarray) -> np.ndarray:
        """A x − y."""
        return self.op.apply(x) - self.measurement


def grad_g(p: Problem, x: np.ndarray) -> np.ndarray:
    """∇g(x) = Aᵀ(Ax − y)."""
    return p.op.adjoint(p.residual(x))


def fidelity(p: Problem, x: np.ndarray) -> float:
    """g(x) = ½‖Ax − y‖²."""
    return 0.5 * norm2_sq(p.residual(x))


def solve_normal(op: LinearOperator, b: np.ndarray, gamma: float,
                 cfg: Optional[SolverConfig] = None) -> np.ndarray:
    """(I + γAᵀA)⁻¹ b by the operator's closed form, else conjugate gradient."""
    if gamma == 0:
        return np.array(b, dtype=np.float64)
    if op.has_normal_solve:
        return op.normal_solve(b, gamma)

    cfg = cfg or SolverConfig()
    shape = op.domain_shape
    n = shape.size

    def matvec(v):
        x = unvectorize(v, shape)
        return vectorize(x + gamma * op.adjoint(op.apply(x)))

    system = ScipyLinearOperator((n, n), matvec=matvec, dtype=np.float64)
    maxiter = cfg.cg_max_iter_factor * n
    solution, info = cg(system, vectorize(b), rtol=cfg.cg_rtol, atol=0.0, maxiter=maxiter)
    if info != 0:
        raise ConvergenceError(
            f"conjugate gradient on (I + {gamma:g} AᵀA) for {op.name} did not reach "
            f"rtol={cfg.cg_rtol:g} within {maxiter} iterations"
        )
    return unvectorize(solution, shape)


class SolverRun:
    """Bookkeeping for one run: trace records, stop rule and divergence guard."""

    def __init__(self, name: str, problem: Problem, cfg: SolverConfig, step_name: str = "gamma"):
        self.name = name
        self.problem = problem
        self.cfg = cfg
        self.step_name = step_name
        self.trace = IterationTrace(solver=name)
        self.logger = logging.getLogger(f"src.core.solvers.{name}")

    def start(self, **details) -> None:
        """Log the run header and keep ``details`` as trace metadata."""
        self.trace.metadata.update(details)
        op = self.problem.op
        self.logger.info(
            f"{self.name}: {op.domain_shape} -> {op.range_shape}, gamma={self.cfg.gamma:g}, "
            f"tau={self.cfg.tau:g}, max_iters={self.cfg.max_iters}"
        )

    def warn(self, message: str) -> None:
        """Log a warning and copy it into the trace."""
        self.logger.warning(message)
        self.trace.warn(message)

    def _step_value(self) -> float:
        return getattr(self.cfg, self.step_name)

    def diverged(self, iteration: int, what: str) -> None:
        """Finish the trace as diverged and raise."""
        self.trace.finish(StopReason.DIVERGED)
        message = (
            f"{self.name} diverged at iteration {iteration} ({what}); "
            f"try a smaller {self.step_name} (currently {self._step_value():g})"
        )
        self.logger.error(message)
        raise DivergenceError(message, self.trace)

    def step(self, iteration: int, x: np.ndarray, x_prev: np.ndarray, *,
             regularizer: Optional[float] = None, objective: Optional[float] = None,
             primal_residual: Optional[float] = None,
             constraint_residual: Optional[float] = None) -> bool:
        """Record iteration ``iteration``; True when the run should stop.

        ``regularizer`` is the weighted term that enters the objective; when
        ``objective`` is not given it is fidelity + regularizer.
        """
        threshold = self.cfg.divergence_threshold
        if not np.all(np.isfinite(x)):
            self.diverged(iteration, "non-finite iterate")
        x_norm = norm2(x)
        if x_norm > threshold:
            self.diverged(iteration, f"iterate norm {x_norm:.3g} exceeds {threshold:g}")

        fid = fidelity(self.problem, x)
        if objective is None and regularizer is not None:
            objective = fid + regularizer
        if objective is not None and (not math.isfinite(objective) or objective > threshold):
            self.diverged(iteration, f"objective {objective:.3g} exceeds {threshold:g}")

        rel = relative_change(x, x_prev)
        quality = None
        if self.problem.ground_truth is not None:
            quality = psnr(self.problem.ground_truth, x)

        self.trace.append(IterationRecord(
            iteration=iteration,
            fidelity=fid,
            regularizer=regularizer,
            objective=objective,
            rel_change=rel,
            primal_residual=primal_residual,
            constraint_residual=constraint_residual,
            psnr=quality
        ))
        if self.cfg.record_iterates:
            self.trace.record_iterate(x)
        self.logger.debug(f"{self.name} iter {iteration}: fidelity={fid:.6g} rel_change={rel:.3g}")

        if rel < self.cfg.tol:
            self.trace.finish(StopReason.CONVERGED)
            return True
        if iteration >= self.cfg.max_iters:
            self.trace.finish(StopReason.MAX_ITERS)
            return True
        return False

    def result(self, x: np.ndarray):
        """Close the run and return (x, trace)."""
        if self.trace.stop_reason is None:
            self.trace.finish(StopReason.MAX_ITERS)
        summary = self.trace.summary()
        self.logger.info(
            f"{self.name}: stopped ({summary['stop_reason']}) after {summary['iterations']} "
            f"iterations, objective={summary['objective']}"
        )
        return x, self.trace


def weighted_value(value: Optional[float], weight: float) -> Optional[float]:
    """weight·value, keeping None; an infinite value at zero weight is 0."""
    if value is None:
        return None
    if weight == 0:
        return 0.0
    return weight * value


def fista_momentum(n: int):
    """First ``n`` terms q₀, q₁, … of q_k = (1 + √(1 + 4q²_{k−1}))/2, q₀ = 1."""
    q = [1.0]
    while len(q) < n:
        q.append(0.5 * (1.0 + math.sqrt(1.0 + 4.0 * q[-1] ** 2)))
    return q[:n]
