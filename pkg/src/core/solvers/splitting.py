"""
Splitting solvers built on the normal-equation solve: ADMM, HQS, PnP-ADMM
and RED-ADMM.
"""

import numpy as np

from ...models.config import SolverConfig
from ..denoisers import Denoiser, red_regularizer_value
from ..errors import ConfigError
from ..prox import ProximalMap
from ..tensor import norm2, norm2_sq
from .base import Problem, SolverRun, fidelity, solve_normal, weighted_value
from .gradient import red_sigma


def run_admm(p: Problem, prox: ProximalMap, cfg: SolverConfig):
    """Scaled-form ADMM on the split x = z.

    x^k = (I + γAᵀA)⁻¹(z^{k−1} − s^{k−1} + γAᵀy)
    z^k = prox_{γτr}(x^k + s^{k−1})
    s^k = s^{k−1} + x^k − z^k
    """
    run = SolverRun("admm", p, cfg)
    run.start(prox=prox.kind.value, normal_solve="closed_form" if p.op.has_normal_solve else "cg")
    aty = p.op.adjoint(p.measurement)

    x = p.initial()
    z = x.copy()
    s = np.zeros_like(x)
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        x = solve_normal(p.op, z - s + cfg.gamma * aty, cfg.gamma, cfg)
        z = prox(x + s, cfg.gamma * cfg.tau)
        s = s + (x - z)
        reg = weighted_value(prox.value(x), cfg.tau)
        if run.step(k, x, x_prev, regularizer=reg, primal_residual=norm2(x - z)):
            break
    return run.result(x)


def run_hqs(p: Problem, prox: ProximalMap, cfg: SolverConfig):
    """Half-quadratic splitting.

    x^k = (I + γAᵀA)⁻¹(z^{k−1} + γAᵀy);  z^k = prox_{γτr}(x^k).
    The recorded objective is the penalized g(x) + τr(z) + ‖x − z‖²/(2γ).
    """
    run = SolverRun("hqs", p, cfg)
    run.start(prox=prox.kind.value, normal_solve="closed_form" if p.op.has_normal_solve else "cg")
    aty = p.op.adjoint(p.measurement)

    x = p.initial()
    z = x.copy()
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        x = solve_normal(p.op, z + cfg.gamma * aty, cfg.gamma, cfg)
        z = prox(x, cfg.gamma * cfg.tau)
        reg = weighted_value(prox.value(z), cfg.tau)
        penalized = None
        if reg is not None:
            penalized = fidelity(p, x) + reg + norm2_sq(x - z) / (2.0 * cfg.gamma)
        if run.step(k, x, x_prev, regularizer=reg, objective=penalized,
                    primal_residual=norm2(x - z)):
            break
    return run.result(x)


def run_pnp_admm(p: Problem, d: Denoiser, cfg: SolverConfig):
    """Plug-and-play ADMM with the data term in the z role.

    z^k = prox_{γg}(x^{k−1} − s^{k−1});  x^k = D_σ(z^k + s^{k−1});  s^k = s^{k−1} + z^k − x^k
    """
    run = SolverRun("pnp_admm", p, cfg)
    run.start(denoiser=d.kind.value, sigma_schedule=list(cfg.sigma_schedule))
    aty = p.op.adjoint(p.measurement)

    x = p.initial()
    s = np.zeros_like(x)
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        z = solve_normal(p.op, x - s + cfg.gamma * aty, cfg.gamma, cfg)
        x = d(z + s, cfg.sigma_at(k))
        s = s + (z - x)
        if run.step(k, x, x_prev, primal_residual=norm2(z - x)):
            break
    return run.result(x)


def red_admm_z_update(d: Denoiser, z_prev: np.ndarray, v: np.ndarray, gamma: float,
                      lam: float, sigma: float = 0.0, denoise_twice: bool = False) -> np.ndarray:
    """One fixed-point step for argmin_z (λ/2)zᵀ(z − f(z)) + ‖z − v‖²/(2γ).

    z = γ/(1+γλ)·(λf(ẑ) + v/γ) with ẑ = z_prev; ``denoise_twice`` uses
    f(f(z_prev)) instead.
    """
    denoised = d(z_prev, sigma)
    if denoise_twice:
        denoised = d(denoised, sigma)
    return gamma / (1.0 + gamma * lam) * (lam * denoised + v / gamma)


def run_red_admm(p: Problem, d: Denoiser, cfg: SolverConfig):
    """RED via ADMM: normal solve, one fixed-point z step, dual ascent."""
    if cfg.lam <= 0:
        raise ConfigError(f"RED-ADMM needs lambda > 0, got {cfg.lam}")
    sigma = red_sigma(cfg)
    run = SolverRun("red_admm", p, cfg)
    run.start(denoiser=d.kind.value, red_sigma=sigma, lam=cfg.lam,
              denoise_twice=cfg.denoise_twice)
    aty = p.op.adjoint(p.measurement)

    x = p.initial()
    z = x.copy()
    s = np.zeros_like(x)
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        x = solve_normal(p.op, z - s + cfg.gamma * aty, cfg.gamma, cfg)
        z = red_admm_z_update(d, z, x + s, cfg.gamma, cfg.lam, sigma, cfg.denoise_twice)
        s = s + (x - z)
        reg = red_regularizer_value(d, x, cfg.lam, sigma)
        if run.step(k, x, x_prev, regularizer=reg, primal_residual=norm2(x - z)):
            break
    return run.result(x)
