"""
Gradient-type solvers: ISTA/FISTA, TwIST, AMP, PnP-PGM and RED steepest descent.
"""

import math
from typing import Callable

import numpy as np

from ...models.config import SolverConfig
from ..denoisers import Denoiser, monte_carlo_divergence, red_regularizer_value
from ..errors import ConfigError
from ..prox import ProximalMap
from ..tensor import norm2
from .base import Problem, SolverRun, grad_g, weighted_value


def _proximal_gradient(run: SolverRun, p: Problem, step: Callable[[np.ndarray, int], np.ndarray],
                       cfg: SolverConfig, accelerate: bool, regularizer=None):
    """x^k = step(s^{k−1} − γ∇g(s^{k−1})), with FISTA momentum on s when accelerating."""
    x = p.initial()
    s = x
    q_prev = 1.0
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        x = step(s - cfg.gamma * grad_g(p, s), k)
        if accelerate:
            q = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * q_prev * q_prev))
            s = x + ((q_prev - 1.0) / q) * (x - x_prev)
            q_prev = q
        else:
            s = x
        reg = regularizer(x) if regularizer else None
        if run.step(k, x, x_prev, regularizer=reg):
            break
    return run.result(x)


def _prox_regularizer(prox: ProximalMap, tau: float):
    return lambda x: weighted_value(prox.value(x), tau)


def _prox_step(prox: ProximalMap, weight: float):
    def step(z, k):
        return prox(z, weight)
    return step


def _denoiser_step(d: Denoiser, cfg: SolverConfig):
    def step(z, k):
        return d(z, cfg.sigma_at(k))
    return step


def run_ista(p: Problem, prox: ProximalMap, cfg: SolverConfig):
    """Proximal gradient: x^k = prox_{γτr}(x^{k−1} − γAᵀ(Ax^{k−1} − y))."""
    run = SolverRun("ista", p, cfg)
    run.start(prox=prox.kind.value)
    step = _prox_step(prox, cfg.gamma * cfg.tau)
    return _proximal_gradient(run, p, step, cfg, False, _prox_regularizer(prox, cfg.tau))


def run_fista(p: Problem, prox: ProximalMap, cfg: SolverConfig):
    """ISTA with the q-sequence momentum; ``cfg.accelerate`` off makes it ISTA."""
    run = SolverRun("fista", p, cfg)
    run.start(prox=prox.kind.value, accelerate=cfg.accelerate)
    step = _prox_step(prox, cfg.gamma * cfg.tau)
    return _proximal_gradient(run, p, step, cfg, cfg.accelerate, _prox_regularizer(prox, cfg.tau))


def run_twist(p: Problem, prox: ProximalMap, cfg: SolverConfig):
    """Two-step IST with x^{−1} = x^0.

    x^k = (1−α)x^{k−2} + (α−β)x^{k−1} + β·prox_{γτr}(x^{k−1} − γ∇g(x^{k−1}))
    """
    beta = 1.0 if cfg.beta is None else cfg.beta
    if cfg.alpha <= 0 or beta <= 0:
        raise ConfigError(f"TwIST needs alpha > 0 and beta > 0, got alpha={cfg.alpha}, beta={beta}")
    run = SolverRun("twist", p, cfg)
    run.start(prox=prox.kind.value, alpha=cfg.alpha, beta=beta)
    regularizer = _prox_regularizer(prox, cfg.tau)

    x = p.initial()
    x_older = x
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        shrunk = prox(x_prev - cfg.gamma * grad_g(p, x_prev), cfg.gamma * cfg.tau)
        x = (1.0 - cfg.alpha) * x_older + (cfg.alpha - beta) * x_prev + beta * shrunk
        x_older = x_prev
        if run.step(k, x, x_prev, regularizer=regularizer(x)):
            break
    return run.result(x)


def run_amp(p: Problem, denoiser: Denoiser, cfg: SolverConfig):
    """Denoising AMP with an Onsager-corrected residual.

    v = x + γAᵀz;  x⁺ = D_σ(v);  z⁺ = y − Ax⁺ + δ·mean(div D_σ(v))·z
    with δ = n/m unless configured, the divergence estimated by one seeded
    Monte Carlo draw per iteration.
    """
    delta = cfg.delta if cfg.delta is not None else p.n / p.m
    rng = np.random.default_rng(cfg.seed)
    run = SolverRun("amp", p, cfg)
    run.start(denoiser=denoiser.kind.value, delta=delta, seed=cfg.seed)

    x = p.initial()
    z = p.measurement - p.op.apply(x)
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        sigma = cfg.sigma_at(k)
        v = x + cfg.gamma * p.op.adjoint(z)
        x = denoiser(v, sigma)
        mean_div = monte_carlo_divergence(denoiser, v, sigma, rng) / p.n
        residual = p.measurement - p.op.apply(x)
        z = residual + delta * mean_div * z
        if run.step(k, x, x_prev, constraint_residual=norm2(residual)):
            break
    return run.result(x)


def run_pnp_pgm(p: Problem, d: Denoiser, cfg: SolverConfig):
    """Plug-and-play proximal gradient: z = s − γ∇g(s); x = D_σ(z); momentum on s."""
    run = SolverRun("pnp_pgm", p, cfg)
    run.start(denoiser=d.kind.value, accelerate=cfg.accelerate,
              sigma_schedule=list(cfg.sigma_schedule))
    step = _denoiser_step(d, cfg)
    return _proximal_gradient(run, p, step, cfg, cfg.accelerate)


def red_sigma(cfg: SolverConfig) -> float:
    """σ bound to f(·) in RED: the first scheduled strength, else 0."""
    return cfg.sigma_schedule[0] if cfg.sigma_schedule else 0.0


def run_red_gd(p: Problem, d: Denoiser, cfg: SolverConfig):
    """RED steepest descent: x^k = x^{k−1} − μ(Aᵀ(Ax−y) + λ(x − f(x)))."""
    sigma = red_sigma(cfg)
    run = SolverRun("red_gd", p, cfg, step_name="mu_step")
    run.start(denoiser=d.kind.value, red_sigma=sigma, lam=cfg.lam, mu_step=cfg.mu_step)

    x = p.initial()
    for k in range(1, cfg.max_iters + 1):
        x_prev = x
        x = x_prev - cfg.mu_step * (grad_g(p, x_prev) + cfg.lam * (x_prev - d(x_prev, sigma)))
        reg = red_regularizer_value(d, x, cfg.lam, sigma)
        if run.step(k, x, x_prev, regularizer=reg):
            break
    return run.result(x)
