"""
Iteration trace models for solver runs.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.errors import DomainError

CSV_COLUMNS = ["iter", "fidelity", "regularizer", "objective", "rel_change",
               "primal_residual", "constraint_residual", "psnr"]


class StopReason(Enum):
    """Why a solver stopped."""
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"


def _csv_number(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


@dataclass
class IterationRecord:
    """Diagnostics of one solver iteration; None marks a non-applicable column."""
    iteration: int
    fidelity: float
    regularizer: Optional[float] = None
    objective: Optional[float] = None
    rel_change: Optional[float] = None
    primal_residual: Optional[float] = None
    constraint_residual: Optional[float] = None
    psnr: Optional[float] = None
    stop_reason: Optional[StopReason] = None

    def csv_fields(self) -> List[str]:
        """Fields in CSV_COLUMNS order."""
        values = [self.fidelity, self.regularizer, self.objective, self.rel_change,
                  self.primal_residual, self.constraint_residual, self.psnr]
        return [str(self.iteration)] + [_csv_number(v) for v in values]

    def to_dict(self) -> Dict:
        """Convert record to dictionary representation."""
        return {
            "iteration": self.iteration,
            "fidelity": self.fidelity,
            "regularizer": self.regularizer,
            "objective": self.objective,
            "rel_change": self.rel_change,
            "primal_residual": self.primal_residual,
            "constraint_residual": self.constraint_residual,
            "psnr": self.psnr,
            "stop_reason": self.stop_reason.value if self.stop_reason else None
        }


@dataclass
class IterationTrace:
    """Append-only per-iteration log of a solver run."""
    solver: str
    records: List[IterationRecord] = field(default_factory=list)
    iterates: List[np.ndarray] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    stop_reason: Optional[StopReason] = None

    def append(self, record: IterationRecord) -> None:
        """Add a record; indices must strictly increase."""
        if self.stop_reason is not None:
            raise DomainError(f"trace of {self.solver} is already finished")
        if self.records and record.iteration <= self.records[-1].iteration:
            raise DomainError(
                f"trace indices must increase: {record.iteration} after "
                f"{self.records[-1].iteration}"
            )
        self.records.append(record)

    def record_iterate(self, x: np.ndarray) -> None:
        """Keep a copy of an iterate."""
        self.iterates.append(np.array(x, copy=True))

    def warn(self, message: str) -> None:
        """Attach a warning to the run."""
        self.warnings.append(message)

    def finish(self, reason: StopReason) -> None:
        """Mark the run as stopped; the last record carries the reason."""
        self.stop_reason = reason
        if self.records:
            self.records[-1].stop_reason = reason

    @property
    def iterations(self) -> int:
        """Number of recorded iterations."""
        return len(self.records)

    @property
    def last(self) -> Optional[IterationRecord]:
        """Most recent record."""
        return self.records[-1] if self.records else None

    def objective_values(self) -> List[float]:
        """Objective per iteration, falling back to the data fidelity."""
        return [r.objective if r.objective is not None else r.fidelity for r in self.records]

    def column(self, name: str) -> np.ndarray:
        """One diagnostic column as floats, NaN where not applicable."""
        if name not in CSV_COLUMNS[1:] and name != "iteration":
            raise DomainError(f"unknown trace column {name!r}")
        values = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in values], dtype=np.float64)

    def to_csv_text(self) -> str:
        """Render the trace as CSV."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(record.csv_fields() for record in self.records)
        return buffer.getvalue()

    def to_csv(self, path) -> None:
        """Write the trace CSV atomically."""
        from ..core.io import write_text
        write_text(path, self.to_csv_text())

    def summary(self) -> Dict:
        """Final-state summary."""
        last = self.last
        return {
            "solver": self.solver,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason.value if self.stop_reason else None,
            "objective": self.objective_values()[-1] if last else None,
            "psnr": last.psnr if last else None,
            "warnings": len(self.warnings)
        }

    def to_dict(self) -> Dict:
        """Convert trace to dictionary representation."""
        return {
            "solver": self.solver,
            "records": [r.to_dict() for r in self.records],
            "warnings": list(self.warnings),
            "metadata": dict(self.metadata),
            "stop_reason": self.stop_reason.value if self.stop_reason else None
        }
