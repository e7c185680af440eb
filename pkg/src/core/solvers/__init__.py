"""
Iterative solvers and the registry the CLI picks them from.

Every run function returns ``(x, trace)``. Prox-based solvers take a
ProximalMap, plug-and-play and RED solvers a Denoiser, and the primal-dual
solver a base prox whose conjugate it evaluates together with an operator D.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional

from ...models.config import SolverConfig
from ..errors import ConfigError
from ..linops import LinearOperator
from .base import Problem, SolverRun, fidelity, fista_momentum, grad_g, solve_normal
from .gap import gap_projector, run_gap, run_gap_accelerated
from .gradient import run_amp, run_fista, run_ista, run_pnp_pgm, run_red_gd, run_twist
from .primal_dual import run_primal_dual
from .splitting import red_admm_z_update, run_admm, run_hqs, run_pnp_admm, run_red_admm


class RegularizerKind(Enum):
    """What a solver expects as its regularizer argument."""
    PROX = "prox"
    DENOISER = "denoiser"
    CONJUGATE = "conjugate"


@dataclass(frozen=True)
class SolverSpec:
    """A registered solver."""
    name: str
    run: Callable
    regularizer: RegularizerKind
    description: str
    overrides: Dict[str, Any] = field(default_factory=dict)

    def configure(self, cfg: SolverConfig) -> SolverConfig:
        """Apply the registry's fixed settings to ``cfg``."""
        return cfg.replace(**self.overrides) if self.overrides else cfg

    def to_dict(self) -> Dict:
        """Convert spec to dictionary representation."""
        return {
            "name": self.name,
            "regularizer": self.regularizer.value,
            "description": self.description,
            "overrides": dict(self.overrides)
        }


def _spec(name, run, kind, description, **overrides) -> SolverSpec:
    return SolverSpec(name, run, kind, description, overrides)


SOLVERS: Dict[str, SolverSpec] = {spec.name: spec for spec in (
    _spec("ista", run_ista, RegularizerKind.PROX, "proximal gradient"),
    _spec("fista", run_fista, RegularizerKind.PROX, "proximal gradient with momentum",
          accelerate=True),
    _spec("twist", run_twist, RegularizerKind.PROX, "two-step iterative shrinkage"),
    _spec("amp", run_amp, RegularizerKind.DENOISER, "denoising AMP with Onsager correction"),
    _spec("admm", run_admm, RegularizerKind.PROX, "scaled ADMM on x = z"),
    _spec("hqs", run_hqs, RegularizerKind.PROX, "half-quadratic splitting"),
    _spec("primal_dual", run_primal_dual, RegularizerKind.CONJUGATE,
          "primal-dual on g(x) + tau r(Dx), D the image gradient"),
    _spec("gap", run_gap, RegularizerKind.PROX, "generalized alternating projection"),
    _spec("gap_accelerated", run_gap_accelerated, RegularizerKind.PROX,
          "GAP with a running measurement", accelerate=True),
    _spec("pnp_pgm", run_pnp_pgm, RegularizerKind.DENOISER, "plug-and-play proximal gradient"),
    _spec("pnp_apgm", run_pnp_pgm, RegularizerKind.DENOISER,
          "plug-and-play proximal gradient with momentum", accelerate=True),
    _spec("pnp_admm", run_pnp_admm, RegularizerKind.DENOISER, "plug-and-play ADMM"),
    _spec("red_gd", run_red_gd, RegularizerKind.DENOISER, "RED steepest descent"),
    _spec("red_admm", run_red_admm, RegularizerKind.DENOISER, "RED via ADMM"),
)}


def get_solver(name: str) -> SolverSpec:
    """Look up a registered solver."""
    try:
        return SOLVERS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown solver {name!r}; valid: {', '.join(sorted(SOLVERS))}")


def run_solver(name: str, problem: Problem, regularizer, cfg: SolverConfig,
               d_op: Optional[LinearOperator] = None):
    """Run solver ``name`` with its registry settings applied to ``cfg``."""
    spec = get_solver(name)
    cfg = spec.configure(cfg)
    if spec.regularizer is RegularizerKind.CONJUGATE:
        return spec.run(problem, d_op, regularizer, cfg)
    return spec.run(problem, regularizer, cfg)


__all__ = [
    "Problem",
    "SolverRun",
    "RegularizerKind",
    "SolverSpec",
    "SOLVERS",
    "get_solver",
    "run_solver",
    "grad_g",
    "fidelity",
    "solve_normal",
    "fista_momentum",
    "gap_projector",
    "run_ista",
    "run_fista",
    "run_twist",
    "run_amp",
    "run_admm",
    "run_hqs",
    "run_primal_dual",
    "run_gap",
    "run_gap_accelerated",
    "run_pnp_pgm",
    "run_pnp_admm",
    "run_red_gd",
    "run_red_admm",
    "red_admm_z_update",
]
