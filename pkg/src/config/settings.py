"""
Application settings and configuration management.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

# Load environment variables from .env file
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass  # python-dotenv not installed, use system environment variables


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes")


@dataclass
class Settings:
    """Application settings."""

    # Application metadata
    app_name: str = "ProxRecon"
    app_version: str = "1.0.0"
    app_description: str = "Proximal-splitting solvers for linear imaging inverse problems"

    # Environment
    environment: str = "development"
    debug: bool = False

    # Logging
    log_level: str = "INFO"
    log_file: Optional[Path] = None

    # Numerics
    oracle_max_unknowns: int = 4096
    tv_inner_iters: int = 30
    cg_rtol: float = 1e-10
    cg_max_iter_factor: int = 10
    divergence_threshold: float = 1e12

    # Benchmarks
    bench_workers: int = 1
    default_seed: int = 0

    @property
    def effective_log_level(self) -> str:
        """DEBUG when debug is on, otherwise ``log_level``."""
        return "DEBUG" if self.debug else self.log_level

    @classmethod
    def from_env(cls) -> 'Settings':
        """Create settings from environment variables."""
        log_file = os.getenv("LOG_FILE")
        return cls(
            environment=os.getenv("ENVIRONMENT", "development"),
            debug=_env_bool("DEBUG", "false"),
            log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
            log_file=Path(log_file) if log_file else None,
            oracle_max_unknowns=int(os.getenv("ORACLE_MAX_UNKNOWNS", "4096")),
            tv_inner_iters=int(os.getenv("TV_INNER_ITERS", "30")),
            bench_workers=int(os.getenv("BENCH_WORKERS", "1")),
            default_seed=int(os.getenv("DEFAULT_SEED", "0"))
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary."""
        return {
            "app_name": self.app_name,
            "app_version": self.app_version,
            "environment": self.environment,
            "debug": self.debug,
            "log_level": self.log_level,
            "log_file": str(self.log_file) if self.log_file else None,
            "oracle_max_unknowns": self.oracle_max_unknowns,
            "tv_inner_iters": self.tv_inner_iters,
            "cg_rtol": self.cg_rtol,
            "cg_max_iter_factor": self.cg_max_iter_factor,
            "divergence_threshold": self.divergence_threshold,
            "bench_workers": self.bench_workers,
            "default_seed": self.default_seed
        }


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global _settings
    if _settings is None:
        _settings = Settings.from_env()
    return _settings


def update_settings(**kwargs) -> Settings:
    """Update settings with new values."""
    settings = get_settings()
    for key, value in kwargs.items():
        if hasattr(settings, key):
            setattr(settings, key, value)
    return settings


def reset_settings() -> None:
    """Drop the cached settings so the next get_settings() rereads the environment."""
    global _settings
    _settings = None
