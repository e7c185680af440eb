"""
Generalized alternating projection (GAP) and its accelerated form.
"""

import logging
from typing import Callable

import numpy as np

from ...models.config import SolverConfig
from ..linops import LinearOperator
from ..prox import ProximalMap
from ..tensor import norm2
from .base import Problem, SolverRun, weighted_value

logger = logging.getLogger(__name__)

Projector = Callable[[np.ndarray, np.ndarray], np.ndarray]


def gap_projector(op: LinearOperator) -> Projector:
    """θ, y_eff ↦ θ + Aᵀ(AAᵀ)⁻¹(y_eff − Aθ).

    Uses the operator's diagonal Gram matrix when it has one, otherwise the
    dense pseudo-inverse (desk-scale problems only).
    """
    if op.has_gram_diag:
        return op.gap_project

    from ..oracle import dense_gap_projection, materialize

    dense = materialize(op)
    logger.info(f"{op.name} has no diagonal Gram matrix; GAP uses the dense projection")

    def project(theta, y_eff):
        return dense_gap_projection(dense, theta, y_eff)
    return project


def _start(run: SolverRun, prox: ProximalMap, accelerated: bool) -> None:
    op = run.problem.op
    zero_diag = getattr(op, "zero_diag_count", 0)
    run.start(prox=prox.kind.value, accelerate=accelerated, zero_diag_count=zero_diag,
              projection="diagonal" if op.has_gram_diag else "dense")
    if zero_diag:
        run.warn(f"{zero_diag} measurement entries have a zero Gram diagonal and were set to 1")


def run_gap(p: Problem, prox: ProximalMap, cfg: SolverConfig):
    """GAP: x^k = θ^{k−1} + Aᵀ(AAᵀ)⁻¹(y − Aθ^{k−1});  θ^k = prox_{γτr}(x^k).

    θ⁰ is x⁰ projected onto {x : Ax = y}, where every x^k lies.
    ``cfg.accelerate`` switches to :func:`run_gap_accelerated`.
    """
    if cfg.accelerate:
        return run_gap_accelerated(p, prox, cfg)
    run = SolverRun("gap", p, cfg)
    _start(run, prox, False)
    project = gap_projector(p.op)

    x = p.initial()
    theta = project(x, p.measurement)
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        x = project(theta, p.measurement)
        theta = prox(x, cfg.gamma * cfg.tau)
        reg = weighted_value(prox.value(x), cfg.tau)
        if run.step(k, x, x_prev, regularizer=reg, constraint_residual=norm2(p.residual(x))):
            break
    return run.result(x)


def run_gap_accelerated(p: Problem, prox: ProximalMap, cfg: SolverConfig):
    """Accelerated GAP with a running measurement y^k.

    x^k = θ^{k−1} + Aᵀ(AAᵀ)⁻¹(y^{k−1} − Aθ^{k−1})
    y^k = y^{k−1} + (y − Aθ^{k−1})
    θ^k = prox_{γτr}(x^k)

    θ⁰ is x⁰ projected onto {x : Ax = y} and y⁰ = y, so y¹ = y and the first
    iterate equals plain GAP's.
    """
    run = SolverRun("gap_accelerated", p, cfg)
    _start(run, prox, True)
    project = gap_projector(p.op)

    x = p.initial()
    theta = project(x, p.measurement)
    y_run = p.measurement.copy()
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        x = project(theta, y_run)
        y_run = y_run + (p.measurement - p.op.apply(theta))
        theta = prox(x, cfg.gamma * cfg.tau)
        reg = weighted_value(prox.value(x), cfg.tau)
        if run.step(k, x, x_prev, regularizer=reg, constraint_residual=norm2(p.residual(x))):
            break
    return run.result(x)
