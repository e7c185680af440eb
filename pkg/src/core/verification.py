"""
Oracle-backed self checks run by ``proxrecon verify``.

Every check compares a structured fast path against dense arithmetic on a
desk-scale instance and reports the observed defect next to its tolerance.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from ..config.settings import get_settings
from ..models.config import SolverConfig
from ..models.volume import Shape
from .errors import ReconError, SizeError
from .linops import (BlurKernel, LinearOperator, compose, make_conv, make_gradient, make_identity,
                     make_mask, make_matrix, make_subsample, make_superres, adjoint_mismatch,
                     power_iteration_norm)
from .oracle import (dense_gap_projection, dense_max_eigenvalue, dense_solve_normal, materialize)
from .prox import L1Prox, L2SqProx, NonnegProx, TVProx, prox_conjugate
from .sci import SciOperator, random_binary_masks, sci_admm_x_update, woodbury_check
from .solvers import Problem, run_gap
from .tensor import norm2, vectorize

logger = logging.getLogger(__name__)

ADJOINT_PAIRS = 100
MOREAU_SAMPLES = 100


@dataclass
class CheckResult:
    """Outcome of one verification check."""
    name: str
    value: float
    tolerance: float
    detail: str = ""
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.value <= self.tolerance

    def to_dict(self) -> Dict:
        """Convert check result to dictionary representation."""
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
            "error": self.error
        }


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


class VerificationSuite:
    """
    Oracle checks at a given scale.

    ``scale`` s gives (2s+2) x (2s+2) images and (2s+2) x (2s+2) x 4 videos,
    so the default scale 3 checks 8x8 and 8x8x4 instances.
    """

    def __init__(self, scale: int = 3, seed: int = 0, max_unknowns: Optional[int] = None):
        """Build the operator zoo for ``scale``."""
        self.scale = scale
        self.seed = seed
        self.max_unknowns = max_unknowns or get_settings().oracle_max_unknowns
        side = 2 * scale + 2
        self.image = Shape.image(side, side)
        self.video = Shape.video(side, side, 4)
        if self.video.size > self.max_unknowns:
            raise SizeError(
                f"scale {scale} needs {self.video.size} unknowns; the oracle cap is {self.max_unknowns}"
            )
        self.rng = np.random.default_rng(seed)
        self.logger = logging.getLogger("src.verify")

    def operators(self) -> Dict[str, LinearOperator]:
        """Every registered operator family on this scale's shapes."""
        kernel = BlurKernel.gaussian(1.0, radius=min(3, (self.image.nrow - 1) // 2))
        mask = (self.rng.random(self.image.dims) < 0.5).astype(np.float64)
        matrix = self.rng.standard_normal((4, 6))
        return {
            "identity": make_identity(self.image),
            "mask": make_mask(mask),
            "conv": make_conv(kernel, self.image),
            "superres": make_superres(kernel, self.image, 2),
            "compose": compose(make_subsample(self.image, 2), make_conv(kernel, self.image)),
            "sci": SciOperator(random_binary_masks(self.video, 0.5, self.seed)),
            "gradient": make_gradient(self.image),
            "matrix": make_matrix(matrix, Shape.image(2, 3), Shape.image(2, 2)),
        }

    def _random(self, shape: Shape) -> np.ndarray:
        return self.rng.standard_normal(shape.dims)

    def check_adjoints(self) -> List[CheckResult]:
        results = []
        for name, op in self.operators().items():
            worst = 0.0
            for _ in range(ADJOINT_PAIRS):
                x, y = self._random(op.domain_shape), self._random(op.range_shape)
                worst = max(worst, adjoint_mismatch(op, x, y))
            results.append(CheckResult(f"adjoint:{name}", worst, 1e-10,
                                       f"{ADJOINT_PAIRS} random pairs"))
        return results

    def check_materialized(self) -> List[CheckResult]:
        results = []
        for name, op in self.operators().items():
            dense = materialize(op, self.max_unknowns)
            x, y = self._random(op.domain_shape), self._random(op.range_shape)
            forward = _max_abs(vectorize(op.apply(x)), dense.entries @ vectorize(x))
            backward = _max_abs(vectorize(op.adjoint(y)), dense.entries.T @ vectorize(y))
            results.append(CheckResult(f"dense:{name}", max(forward, backward), 1e-12,
                                       "apply and adjoint vs materialized matrix"))
        return results

    def check_normal_solves(self) -> List[CheckResult]:
        results = []
        for name, op in self.operators().items():
            if not op.has_normal_solve:
                continue
            dense = materialize(op, self.max_unknowns)
            b = self._random(op.domain_shape)
            worst = 0.0
            for gamma in (0.1, 1.0, 10.0):
                closed = op.normal_solve(b, gamma)
                reference = dense_solve_normal(dense, gamma, b)
                worst = max(worst, _max_abs(closed, reference))
            results.append(CheckResult(f"normal_solve:{name}", worst, 1e-8, "gamma in 0.1, 1, 10"))
        return results

    def check_sci(self) -> List[CheckResult]:
        op = SciOperator(random_binary_masks(self.video, 0.5, self.seed + 1))
        dense = materialize(op, self.max_unknowns)
        gram = dense.entries @ dense.entries.T
        off_diagonal = gram - np.diag(np.diag(gram))
        theta, y = self._random(op.domain_shape), self._random(op.range_shape)
        live = op.phi_sum_raw > 0
        y = np.where(live, y, 0.0)
        results = [
            CheckResult("sci.gram_diagonal", _max_abs(np.diag(gram), vectorize(op.phi_sum_raw)), 0.0,
                        "diag(AAᵀ) vs sum of squared masks"),
            CheckResult("sci.gram_off_diagonal", float(np.max(np.abs(off_diagonal))), 0.0,
                        "AAᵀ is diagonal"),
            CheckResult("sci.gap_x_update",
                        _max_abs(op.gap_project(theta, y), dense_gap_projection(dense, theta, y)),
                        1e-8, "vs dense pseudo-inverse projection"),
        ]
        worst = 0.0
        z, s = self._random(op.domain_shape), self._random(op.domain_shape)
        for gamma in (0.5, 1.0, 5.0):
            fast = sci_admm_x_update(op, z, s, y, gamma)
            reference = dense_solve_normal(dense, gamma, z - s + gamma * op.adjoint(y))
            worst = max(worst, _max_abs(fast, reference))
        results.append(CheckResult("sci.admm_x_update", worst, 1e-8, "gamma in 0.5, 1, 5"))
        return results

    def check_woodbury(self) -> List[CheckResult]:
        results = []
        small = SciOperator(random_binary_masks(Shape.video(3, 3, 2), 0.5, self.seed))
        sample = self._random(small.domain_shape)
        worst = max(woodbury_check(small, gamma, sample) for gamma in (0.5, 1.0, 5.0))
        results.append(CheckResult("woodbury:3x3x2", worst, 1e-10, "gamma in 0.5, 1, 5"))
        return results

    def check_gap_feasibility(self, iterations: int = 50) -> List[CheckResult]:
        op = SciOperator(random_binary_masks(self.video, 0.5, self.seed + 2))
        truth = self.rng.random(op.domain_shape.dims)
        y = op.apply(truth)
        cfg = SolverConfig(gamma=1.0, tau=0.05, max_iters=iterations, tol=0.0)
        _, trace = run_gap(Problem(op, y), TVProx(inner_iters=10), cfg)
        worst = float(np.max(trace.column("constraint_residual"))) / norm2(y)
        return [CheckResult("gap.feasibility", worst, 1e-10, f"{trace.iterations} iterations")]

    def check_moreau(self) -> List[CheckResult]:
        results = []
        for prox in (L1Prox(), L2SqProx(), NonnegProx()):
            worst = 0.0
            for sigma in (0.5, 1.0, 2.0):
                for _ in range(MOREAU_SAMPLES):
                    x = self._random(self.image)
                    rebuilt = prox_conjugate(prox, x, sigma) + sigma * prox(x / sigma, 1.0 / sigma)
                    worst = max(worst, _max_abs(rebuilt, x))
            results.append(CheckResult(f"moreau:{prox.kind.value}", worst, 1e-12,
                                       f"sigma in 0.5, 1, 2; {MOREAU_SAMPLES} samples each"))
        return results

    def check_power_iteration(self) -> List[CheckResult]:
        results = []
        for name in ("conv", "sci", "matrix"):
            op = self.operators()[name]
            exact = dense_max_eigenvalue(materialize(op, self.max_unknowns))
            estimate = power_iteration_norm(op, 1000, self.seed)
            results.append(CheckResult(f"power_iteration:{name}", abs(estimate - exact) / exact,
                                       1e-6, f"dense eigenvalue {exact:.6g}"))
        return results

    def checks(self) -> List[Callable[[], List[CheckResult]]]:
        return [
            self.check_adjoints,
            self.check_materialized,
            self.check_normal_solves,
            self.check_sci,
            self.check_woodbury,
            self.check_gap_feasibility,
            self.check_moreau,
            self.check_power_iteration,
        ]

    def run(self) -> List[CheckResult]:
        """Run all checks; a check that raises is reported as failed."""
        results: List[CheckResult] = []
        for check in self.checks():
            name = check.__name__.replace("check_", "")
            try:
                results.extend(check())
            except ReconError as exc:
                self.logger.error(f"check {name} raised: {exc}")
                results.append(CheckResult(name, float("inf"), 0.0, error=str(exc)))
        failed = sum(not r.passed for r in results)
        self.logger.info(f"verification: {len(results) - failed}/{len(results)} checks passed")
        return results
