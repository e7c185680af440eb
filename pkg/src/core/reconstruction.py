"""
ReconstructionWorkbench: builds forward models from a RunConfig, simulates
measurements, runs solvers and assembles benchmark reports.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config.logging import LoggingConfig
from ..config.settings import get_settings
from ..models.bench import BenchReport, BenchRow
from ..models.config import Modality, RunConfig, SolverConfig
from ..models.trace import IterationTrace, StopReason
from ..models.volume import Shape
from .denoisers import DenoiserProx, make_denoiser
from .errors import ConfigError, DivergenceError, ReconError
from .io import read_kernel_taps, read_volume, write_ivol
from .linops import (BlurKernel, LinearOperator, make_conv, make_identity, make_mask,
                     make_superres, power_iteration_norm)
from .phantoms import add_noise, make_phantom
from .prox import make_prox
from .sci import SciOperator, random_binary_masks
from .solvers import Problem, RegularizerKind, get_solver, run_solver
from .tensor import psnr

# Solvers whose gamma is a gradient step and must stay below 2/L.
GRADIENT_STEP_SOLVERS = {"ista", "fista", "twist", "amp", "pnp_pgm", "pnp_apgm", "primal_dual"}

# Solvers that read sigma_schedule every iteration.
SCHEDULED_SOLVERS = {"amp", "pnp_pgm", "pnp_apgm", "pnp_admm"}


@dataclass
class Simulation:
    """A simulated measurement with everything needed to score it."""
    op: LinearOperator
    truth: np.ndarray
    measurement: np.ndarray
    masks: Optional[np.ndarray] = None

    def to_dict(self) -> Dict:
        """Convert simulation summary to dictionary representation."""
        return {
            "operator": repr(self.op),
            "truth_shape": list(self.truth.shape),
            "measurement_shape": list(self.measurement.shape),
            "has_masks": self.masks is not None
        }


@dataclass(frozen=True)
class BenchInstance:
    """A built-in benchmark problem and its default solver settings."""
    name: str
    modality: Modality
    shape: Tuple[int, ...]
    kernel: str = "gaussian:1.0"
    factor: int = 2
    density: float = 0.5
    seed: int = 0
    defaults: Dict[str, Any] = field(default_factory=dict)

    def run_config(self, base: RunConfig, solver: str) -> RunConfig:
        """``base`` with this instance's problem and any defaults the user did not set."""
        values = {k: v for k, v in self.defaults.items() if k not in base.model_fields_set}
        values.update(modality=self.modality, shape=self.shape, kernel=self.kernel,
                      factor=self.factor, density=self.density, seed=self.seed,
                      solver=solver, phantom=None, kernel_file=None, mask=None)
        data = base.model_dump(include=base.model_fields_set)
        data.update(values)
        return RunConfig.build(**data)


BENCH_INSTANCES: Dict[str, BenchInstance] = {inst.name: inst for inst in (
    BenchInstance("deblur-8", Modality.DEBLUR, (8, 8),
                  defaults={"tau": 0.01, "iters": 200, "sigma": [10.0], "lam": 0.2}),
    BenchInstance("inpaint-16", Modality.INPAINT, (16, 16), density=0.5, seed=3,
                  defaults={"tau": 0.02, "iters": 150, "sigma": [10.0], "lam": 0.2}),
    BenchInstance("superres-16", Modality.SUPERRES, (16, 16), factor=2,
                  defaults={"tau": 0.01, "iters": 150, "sigma": [10.0], "lam": 0.2}),
    BenchInstance("sci-16", Modality.SCI, (16, 16, 4), density=0.5, seed=7,
                  defaults={"tau": 0.05, "iters": 60, "sigma": [10.0], "lam": 0.2}),
)}


def stop_exit_code(trace: IterationTrace) -> int:
    """0 converged, 2 stopped at max_iters, 3 diverged."""
    if trace.stop_reason is StopReason.CONVERGED:
        return 0
    if trace.stop_reason is StopReason.DIVERGED:
        return 3
    return 2


class ReconstructionWorkbench:
    """
    Entry point for the CLI.

    Ties the operators, phantoms, regularizers and solvers together so one
    RunConfig is enough to simulate, reconstruct or benchmark.
    """

    def __init__(self, settings=None):
        """Initialize the workbench."""
        self.settings = settings or get_settings()
        self.logger = self._setup_logging()
        self.logger.debug("ReconstructionWorkbench initialized")

    def _setup_logging(self) -> logging.Logger:
        """Configure the package logger from settings."""
        LoggingConfig(
            level=self.settings.effective_log_level,
            file_path=self.settings.log_file,
            file_output=self.settings.log_file is not None
        ).configure()
        return logging.getLogger("src.workbench")

    # Forward models

    def kernel(self, cfg: RunConfig) -> BlurKernel:
        """Blur kernel from ``kernel_file`` or the ``kernel`` spec."""
        if cfg.kernel_file is not None:
            return BlurKernel(read_kernel_taps(cfg.kernel_file))
        return BlurKernel.from_spec(cfg.kernel)

    def build_operator(self, cfg: RunConfig, masks: Optional[np.ndarray] = None):
        """Forward operator for ``cfg.modality``; returns (op, masks).

        Inpainting and SCI draw seeded binary masks when none are given.
        """
        shape = Shape.from_dims(cfg.shape)
        modality = cfg.modality

        if modality is Modality.IDENTITY:
            return make_identity(shape), None
        if modality is Modality.DEBLUR:
            return make_conv(self.kernel(cfg), shape), None
        if modality is Modality.SUPERRES:
            return make_superres(self.kernel(cfg), shape, cfg.factor), None
        if modality is Modality.INPAINT:
            if masks is None:
                masks = random_binary_masks(shape, cfg.density, cfg.seed)
                if shape.ndim == 2:
                    masks = masks[:, :, 0]
            return make_mask(masks), masks
        if modality is Modality.SCI:
            if shape.ndim != 3 and masks is None:
                raise ConfigError(f"SCI needs a 3D shape like 16x16x4, got {shape}")
            if masks is None:
                masks = random_binary_masks(shape, cfg.density, cfg.seed)
            op = SciOperator.from_masks(masks)
            return op, op.masks
        raise ConfigError(f"unsupported modality {modality}")

    # Simulation

    def simulate(self, cfg: RunConfig) -> Simulation:
        """y = A x + ε for a phantom x, with seeded masks and noise."""
        self.logger.info(f"Simulating {cfg.modality.value} on {Shape.from_dims(cfg.shape)}")
        op, masks = self.build_operator(cfg)
        truth = make_phantom(cfg.phantom, op.domain_shape)
        rng = np.random.default_rng(cfg.seed + 1)
        measurement = add_noise(op.apply(truth), cfg.noise_sigma, rng)
        return Simulation(op, truth, measurement, masks)

    def save_simulation(self, sim: Simulation, cfg: RunConfig) -> Dict[str, Path]:
        """Write measurement, ground truth and masks; returns the paths written."""
        (output,) = cfg.required_paths("output")
        output = Path(output)
        written = {"measurement": write_ivol(output, sim.measurement)}
        truth_path = cfg.ground_truth or output.with_name(f"{output.stem}_truth.ivol")
        written["ground_truth"] = write_ivol(truth_path, sim.truth)
        if sim.masks is not None:
            mask_path = cfg.mask or output.with_name(f"{output.stem}_mask.ivol")
            written["mask"] = write_ivol(mask_path, sim.masks)
        for role, path in written.items():
            self.logger.info(f"Wrote {role} to {path}")
        return written

    # Reconstruction

    def check_pairing(self, cfg: RunConfig) -> None:
        """Raise ConfigError when the solver and regularizer do not fit together."""
        spec = get_solver(cfg.solver)
        if spec.regularizer is RegularizerKind.DENOISER:
            if cfg.prox is not None:
                raise ConfigError(f"solver {spec.name} needs a denoiser (--denoiser), not a prox")
            if spec.name in SCHEDULED_SOLVERS and not cfg.sigma:
                raise ConfigError(f"solver {spec.name} needs denoiser strengths (--sigma)")
            if spec.name == "red_admm" and cfg.lam <= 0:
                raise ConfigError("red_admm needs --lambda > 0")
        elif spec.regularizer is RegularizerKind.CONJUGATE:
            if cfg.denoiser is not None:
                raise ConfigError(f"solver {spec.name} needs a prox (--prox), not a denoiser")
        elif cfg.prox is not None and cfg.denoiser is not None:
            raise ConfigError(f"give either --prox or --denoiser to {spec.name}, not both")

    def regularizer(self, cfg: RunConfig):
        """ProximalMap or Denoiser matching the solver's registry entry."""
        self.check_pairing(cfg)
        spec = get_solver(cfg.solver)
        inner = cfg.tv_iters if "tv_iters" in cfg.model_fields_set else self.settings.tv_inner_iters
        if spec.regularizer is RegularizerKind.DENOISER:
            return make_denoiser(cfg.denoiser or "tv", inner_iters=inner)
        if spec.regularizer is RegularizerKind.CONJUGATE:
            return make_prox(cfg.prox or "l21", inner_iters=inner)
        if cfg.denoiser is not None:
            denoiser = make_denoiser(cfg.denoiser, inner_iters=inner)
            sigma = cfg.solver_config().sigma_schedule
            return DenoiserProx(denoiser, sigma[0] if sigma else None)
        default = "tv_st" if cfg.modality is Modality.SCI else "tv"
        return make_prox(cfg.prox or default, inner_iters=inner)

    def solver_config(self, cfg: RunConfig, op: LinearOperator) -> SolverConfig:
        """SolverConfig for ``cfg``; gradient solvers get 0.9/L when gamma was not set."""
        solver_cfg = cfg.solver_config(
            cg_rtol=self.settings.cg_rtol,
            cg_max_iter_factor=self.settings.cg_max_iter_factor,
            divergence_threshold=self.settings.divergence_threshold
        )
        name = get_solver(cfg.solver).name
        if name in GRADIENT_STEP_SOLVERS and "gamma" not in cfg.model_fields_set:
            lipschitz = power_iteration_norm(op, solver_cfg.power_iters, cfg.seed)
            if lipschitz > 0:
                solver_cfg = solver_cfg.replace(gamma=0.9 / lipschitz)
                self.logger.info(f"{name}: gamma set to 0.9/L = {solver_cfg.gamma:.4g}")
        return solver_cfg

    def load_problem(self, cfg: RunConfig) -> Problem:
        """Problem from the measurement, mask and ground-truth files in ``cfg``."""
        (input_path,) = cfg.required_paths("input")
        measurement = read_volume(input_path)
        masks = None
        if cfg.modality in (Modality.INPAINT, Modality.SCI):
            (mask_path,) = cfg.required_paths("mask")
            masks = read_volume(mask_path)
        op, _ = self.build_operator(self._shape_from_files(cfg, measurement, masks), masks)
        truth = read_volume(cfg.ground_truth) if cfg.ground_truth is not None else None
        return Problem(op, measurement, ground_truth=truth)

    def _shape_from_files(self, cfg: RunConfig, measurement: np.ndarray,
                          masks: Optional[np.ndarray]) -> RunConfig:
        """``cfg`` with the unknown's shape implied by the files on disk."""
        if masks is not None:
            shape = masks.shape
        elif cfg.modality is Modality.SUPERRES:
            shape = (measurement.shape[0] * cfg.factor, measurement.shape[1] * cfg.factor)
            shape += tuple(measurement.shape[2:])
        else:
            shape = measurement.shape
        data = cfg.model_dump(include=cfg.model_fields_set)
        data["shape"] = tuple(shape)
        return RunConfig.build(**data)

    def reconstruct(self, cfg: RunConfig, problem: Problem):
        """Run ``cfg.solver`` on ``problem``; returns (x, trace)."""
        regularizer = self.regularizer(cfg)
        solver_cfg = self.solver_config(cfg, problem.op)
        self.logger.info(f"Reconstructing with {cfg.solver} ({regularizer!r})")
        return run_solver(cfg.solver, problem, regularizer, solver_cfg)

    @staticmethod
    def baseline(op: LinearOperator, measurement: np.ndarray) -> np.ndarray:
        """Normalized adjoint Aᵀy ⊘ phi_sum for SCI, plain Aᵀy otherwise."""
        x = op.adjoint(measurement)
        if isinstance(op, SciOperator):
            return x / op.phi_sum[:, :, np.newaxis]
        return x

    # Benchmarks

    def bench_jobs(self, cfg: RunConfig) -> List[Tuple[str, str]]:
        """(instance, solver) pairs requested by ``cfg``."""
        instances = cfg.instances or list(BENCH_INSTANCES)
        solvers = cfg.solvers or [cfg.solver]
        unknown = [name for name in instances if name not in BENCH_INSTANCES]
        if unknown:
            raise ConfigError(
                f"unknown bench instance {unknown[0]!r}; valid: {', '.join(BENCH_INSTANCES)}"
            )
        for solver in solvers:
            get_solver(solver)
        return [(instance, solver) for instance in instances for solver in solvers]

    def _bench_one(self, cfg: RunConfig, instance_name: str, solver: str) -> BenchRow:
        instance = BENCH_INSTANCES[instance_name]
        started = time.perf_counter()
        try:
            run_cfg = instance.run_config(cfg, solver)
            sim = self.simulate(run_cfg)
            problem = Problem(sim.op, sim.measurement, ground_truth=sim.truth)
            x, trace = self.reconstruct(run_cfg, problem)
        except DivergenceError as exc:
            trace = exc.trace
            return BenchRow(instance_name, solver, None, trace.iterations if trace else 0,
                            time.perf_counter() - started, None, StopReason.DIVERGED.value, str(exc))
        except Exception as exc:
            message = str(exc) if isinstance(exc, ReconError) else f"{type(exc).__name__}: {exc}"
            self.logger.warning(f"bench {instance_name}/{solver} failed: {message}")
            return BenchRow(instance_name, solver, None, 0, time.perf_counter() - started,
                            None, "", message)
        last = trace.last
        return BenchRow(
            instance=instance_name,
            solver=solver,
            psnr=psnr(sim.truth, x),
            iterations=trace.iterations,
            wall_time=time.perf_counter() - started,
            objective=last.objective if last else None,
            stop_reason=trace.stop_reason.value if trace.stop_reason else ""
        )

    def bench(self, cfg: RunConfig) -> BenchReport:
        """Run every requested solver on every requested instance."""
        jobs = self.bench_jobs(cfg)
        workers = cfg.workers if "workers" in cfg.model_fields_set else self.settings.bench_workers
        self.logger.info(f"Benchmarking {len(jobs)} runs with {workers} worker(s)")
        report = BenchReport()
        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            for row in executor.map(lambda job: self._bench_one(cfg, *job), jobs):
                report.add(row)
        return report

    def get_application_info(self) -> Dict:
        """Settings plus the registered solvers, prox maps and denoisers."""
        from .denoisers import DENOISER_FACTORIES
        from .prox import PROX_FACTORIES
        from .solvers import SOLVERS

        return {
            "name": self.settings.app_name,
            "version": self.settings.app_version,
            "description": self.settings.app_description,
            "environment": self.settings.environment,
            "solvers": {name: spec.to_dict() for name, spec in SOLVERS.items()},
            "prox_maps": sorted(PROX_FACTORIES),
            "denoisers": sorted(DENOISER_FACTORIES),
            "bench_instances": sorted(BENCH_INSTANCES),
            "settings": self.settings.to_dict()
        }
