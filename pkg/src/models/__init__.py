"""
Data models for ProxRecon.
"""

from .volume import Shape
from .trace import CSV_COLUMNS, IterationRecord, IterationTrace, StopReason
from .config import Modality, RunConfig, SolverConfig, Task, parse_key_value
from .bench import BenchReport, BenchRow

__all__ = [
    "Shape",
    "CSV_COLUMNS",
    "IterationRecord",
    "IterationTrace",
    "StopReason",
    "Modality",
    "RunConfig",
    "SolverConfig",
    "Task",
    "parse_key_value",
    "BenchReport",
    "BenchRow"
]
