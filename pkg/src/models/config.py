"""
Solver and run configuration models.

SolverConfig holds every algorithm parameter; RunConfig is what the CLI
assembles from a key=value file and command-line overrides.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..config.settings import get_settings
from ..core.errors import ConfigError


def _raise_config_error(model: str, exc: ValidationError) -> None:
    problems = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or model
        problems.append(f"{location}: {error['msg']}")
    raise ConfigError(f"invalid {model}: " + "; ".join(problems)) from exc


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class SolverConfig(BaseModel):
    """Parameters shared by all solvers.

    ``beta`` is TwIST's β and the primal-dual relaxation β; None lets each
    solver use its own default (1 for TwIST, 0 for primal-dual). ``delta``
    None means n/m from the operator shapes.
    """
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    gamma: float = Field(1.0, gt=0)
    tau: float = Field(0.0, ge=0)
    max_iters: int = Field(100, ge=1)
    tol: float = Field(1e-6, ge=0)
    alpha: float = 1.0
    beta: Optional[float] = None
    sigma_pd: float = Field(0.1, gt=0)
    lam: float = Field(0.0, ge=0, alias="lambda")
    mu_step: float = Field(0.1, gt=0)
    delta: Optional[float] = Field(None, gt=0)
    sigma_schedule: Tuple[float, ...] = ()
    accelerate: bool = False
    record_iterates: bool = False
    seed: int = 0
    cg_rtol: float = Field(1e-10, gt=0)
    cg_max_iter_factor: int = Field(10, ge=1)
    divergence_threshold: float = Field(1e12, gt=0)
    power_iters: int = Field(100, ge=1)
    denoise_twice: bool = False

    @field_validator("sigma_schedule", mode="before")
    @classmethod
    def _parse_schedule(cls, value):
        value = _split_list(value)
        if isinstance(value, (int, float)):
            return (value,)
        return value

    @field_validator("sigma_schedule")
    @classmethod
    def _nonnegative_schedule(cls, value):
        if any(sigma < 0 for sigma in value):
            raise ValueError("denoiser strengths must be >= 0")
        return value

    @classmethod
    def build(cls, **values) -> 'SolverConfig':
        """Validate ``values``, raising ConfigError listing every bad field."""
        try:
            return cls(**values)
        except ValidationError as exc:
            _raise_config_error("solver config", exc)

    def replace(self, **changes) -> 'SolverConfig':
        """Validated copy with ``changes`` applied."""
        values = self.model_dump()
        values.update(changes)
        if "lambda" in values:
            values["lam"] = values.pop("lambda")
        return SolverConfig.build(**values)

    def sigma_at(self, iteration: int) -> float:
        """Denoiser strength for a 1-based iteration; the last value repeats."""
        if not self.sigma_schedule:
            raise ConfigError("sigma_schedule must be nonempty when a denoiser is used")
        return self.sigma_schedule[min(iteration, len(self.sigma_schedule)) - 1]


class Task(Enum):
    """CLI subcommands."""
    SIMULATE = "simulate"
    RECONSTRUCT = "reconstruct"
    BENCH = "bench"
    VERIFY = "verify"
    INFO = "info"


class Modality(Enum):
    """Forward-model families."""
    IDENTITY = "identity"
    INPAINT = "inpaint"
    DEBLUR = "deblur"
    SUPERRES = "superres"
    SCI = "sci"


# Denoiser strengths on the command line use the [0, 255] scale.
SIGMA_SCALE = 255.0


class RunConfig(BaseModel):
    """Everything one CLI invocation needs."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    task: Task = Task.INFO
    modality: Modality = Modality.SCI
    shape: Tuple[int, ...] = (16, 16, 4)
    kernel: str = "gaussian:1.0"
    kernel_file: Optional[Path] = None
    factor: int = Field(2, ge=1)
    density: float = 0.5
    phantom: Optional[str] = None
    noise_sigma: float = Field(0.0, ge=0)
    seed: int = Field(default_factory=lambda: get_settings().default_seed)

    solver: str = "gap"
    prox: Optional[str] = None
    denoiser: Optional[str] = None
    tv_iters: int = Field(30, ge=1)
    gamma: float = Field(1.0, gt=0)
    tau: float = Field(0.0, ge=0)
    iters: int = Field(100, ge=1)
    tol: float = Field(1e-6, ge=0)
    alpha: float = 1.0
    beta: Optional[float] = None
    sigma_pd: float = Field(0.1, gt=0)
    lam: float = Field(0.0, ge=0, alias="lambda")
    mu_step: float = Field(0.1, gt=0)
    delta: Optional[float] = Field(None, gt=0)
    sigma: List[float] = Field(default_factory=list)
    accelerate: bool = False

    input: Optional[Path] = None
    mask: Optional[Path] = None
    ground_truth: Optional[Path] = None
    output: Optional[Path] = None
    trace: Optional[Path] = None

    solvers: List[str] = Field(default_factory=list)
    instances: List[str] = Field(default_factory=list)
    workers: int = Field(1, ge=1)
    scale: int = Field(3, ge=1)

    @field_validator("shape", mode="before")
    @classmethod
    def _parse_shape(cls, value):
        if isinstance(value, str):
            try:
                return tuple(int(part) for part in value.lower().split("x"))
            except ValueError:
                raise ValueError(f"shape must look like 16x16x4, got {value!r}")
        return value

    @field_validator("shape")
    @classmethod
    def _check_shape(cls, value):
        if len(value) not in (2, 3) or any(extent < 1 for extent in value):
            raise ValueError("shape needs 2 or 3 positive extents")
        return value

    @field_validator("density")
    @classmethod
    def _check_density(cls, value):
        if not 0 < value <= 1:
            raise ValueError(f"mask density must lie in (0, 1], got {value}")
        return value

    @field_validator("sigma", "solvers", "instances", mode="before")
    @classmethod
    def _parse_lists(cls, value):
        value = _split_list(value)
        if isinstance(value, (int, float)):
            return [value]
        return value

    @classmethod
    def build(cls, **values) -> 'RunConfig':
        """Validate ``values``, raising ConfigError listing every bad field."""
        try:
            return cls(**values)
        except ValidationError as exc:
            _raise_config_error("run config", exc)

    @classmethod
    def from_sources(cls, config_file: Optional[Path] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """Config file values overlaid by ``overrides`` (None entries ignored)."""
        values: Dict[str, Any] = {}
        if config_file is not None:
            try:
                text = Path(config_file).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config file {config_file}: {exc}") from exc
            values.update(parse_key_value(text))
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return cls.build(**values)

    def solver_config(self, **extra) -> SolverConfig:
        """SolverConfig for this run; σ values converted to the [0, 1] scale."""
        values = {
            "gamma": self.gamma,
            "tau": self.tau,
            "max_iters": self.iters,
            "tol": self.tol,
            "alpha": self.alpha,
            "beta": self.beta,
            "sigma_pd": self.sigma_pd,
            "lam": self.lam,
            "mu_step": self.mu_step,
            "delta": self.delta,
            "sigma_schedule": tuple(s / SIGMA_SCALE for s in self.sigma),
            "accelerate": self.accelerate,
            "seed": self.seed,
        }
        values.update(extra)
        return SolverConfig.build(**values)

    def required_paths(self, *names: str) -> List[Path]:
        """Return the named paths, raising ConfigError when one is missing."""
        paths = []
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"--{name.replace('_', '-')} is required for {self.task.value}")
            paths.append(path)
        return paths

    def to_dict(self) -> Dict:
        """Convert run config to dictionary representation."""
        return self.model_dump(mode="json", by_alias=True)


def parse_key_value(text: str) -> Dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"config line {number}: expected key=value, got {raw.strip()!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values
