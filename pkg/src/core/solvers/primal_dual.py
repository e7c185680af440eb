"""
Chambolle-Pock primal-dual solver for g(x) + τ·r(Dx).
"""

import numpy as np

from ...models.config import SolverConfig
from ..linops import GradientOperator, LinearOperator, power_iteration_norm
from ..prox import ProximalMap, prox_conjugate
from .base import Problem, SolverRun, grad_g, weighted_value


def run_primal_dual(p: Problem, d_op: LinearOperator, prox_r_conj_base: ProximalMap,
                    cfg: SolverConfig):
    """Primal-dual splitting with an explicit gradient step on g.

    x̂ = x − τ_p Aᵀ(Ax − y) − τ_p Dᵀz
    ẑ = prox_{σ(τr)*}(z + σD(2x̂ − x))       (Moreau identity)
    (x, z) = (x̂, ẑ) + β((x̂, ẑ) − (x, z))

    τ_p is ``cfg.gamma``, σ is ``cfg.sigma_pd``, β is ``cfg.beta`` (default 0)
    and the regularization weight is ``cfg.tau``. D defaults to the discrete
    gradient when ``d_op`` is None.
    """
    if d_op is None:
        d_op = GradientOperator(p.op.domain_shape)
    step, sigma = cfg.gamma, cfg.sigma_pd
    beta = 0.0 if cfg.beta is None else cfg.beta

    run = SolverRun("primal_dual", p, cfg)
    d_norm_sq = power_iteration_norm(d_op, cfg.power_iters, cfg.seed)
    run.start(prox=prox_r_conj_base.kind.value, sigma_pd=sigma, beta=beta, d_norm_sq=d_norm_sq)
    if step * sigma * d_norm_sq >= 1.0:
        run.warn(
            f"step product tau*sigma*||D||^2 = {step * sigma * d_norm_sq:.4g} >= 1; "
            "primal-dual may not converge"
        )

    x = p.initial()
    z = np.zeros(d_op.range_shape.dims)
    dual_max_abs = run.trace.metadata.setdefault("dual_max_abs", [])
    for k in range(1, cfg.max_iters + 1):
        x_prev, z_prev = x, z
        x_hat = x_prev - step * grad_g(p, x_prev) - step * d_op.adjoint(z_prev)
        z_hat = prox_conjugate(prox_r_conj_base, z_prev + sigma * d_op.apply(2.0 * x_hat - x_prev),
                               sigma, cfg.tau)
        if beta:
            x = x_hat + beta * (x_hat - x_prev)
            z = z_hat + beta * (z_hat - z_prev)
        else:
            x, z = x_hat, z_hat
        dual_max_abs.append(float(np.max(np.abs(z))))
        reg = weighted_value(prox_r_conj_base.value(d_op.apply(x)), cfg.tau)
        if run.step(k, x, x_prev, regularizer=reg):
            break
    return run.result(x)
