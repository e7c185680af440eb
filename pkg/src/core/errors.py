"""
Exception hierarchy for ProxRecon.
"""

from typing import Any, Optional


class ReconError(Exception):
    """Base class for every error raised by ProxRecon."""


class ShapeMismatchError(ReconError, ValueError):
    """Two volumes or operators disagree on their shapes."""

    def __init__(self, message: str, expected: Any = None, actual: Any = None):
        if expected is not None or actual is not None:
            message = f"{message} (expected {expected}, got {actual})"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class DomainError(ReconError, ValueError):
    """A value lies outside the domain of an operation."""


class SizeError(ReconError, ValueError):
    """A dense computation was refused because the problem is too large."""


class ConfigError(ReconError, ValueError):
    """Invalid solver or run configuration."""


class FormatError(ReconError, ValueError):
    """A file could not be parsed as IVOL, PGM or kernel text."""


class ConvergenceError(ReconError, RuntimeError):
    """An inner solve or estimator did not reach its target."""


class DivergenceError(ReconError, RuntimeError):
    """A solver iterate blew up; the partial trace is attached."""

    def __init__(self, message: str, trace: Optional[Any] = None):
        super().__init__(message)
        self.trace = trace
