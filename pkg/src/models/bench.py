"""
Benchmark report models.
"""

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional

BENCH_COLUMNS = ["instance", "solver", "psnr", "iterations", "wall_time",
                 "objective", "stop_reason", "error"]


def bench_columns(include_wall_time: bool = False) -> List[str]:
    """Report header, with or without the wall_time column."""
    return [c for c in BENCH_COLUMNS if include_wall_time or c != "wall_time"]


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


@dataclass
class BenchRow:
    """Result of one (solver, instance) run."""
    instance: str
    solver: str
    psnr: Optional[float] = None
    iterations: int = 0
    wall_time: Optional[float] = None
    objective: Optional[float] = None
    stop_reason: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        """True when the run finished without an error."""
        return not self.error

    def csv_fields(self, include_wall_time: bool = False) -> List[str]:
        """Fields in BENCH_COLUMNS order; wall time only when asked for."""
        fields = [self.instance, self.solver, _fmt(self.psnr), str(self.iterations)]
        if include_wall_time:
            fields.append(_fmt(self.wall_time))
        return fields + [_fmt(self.objective), self.stop_reason, self.error]

    def to_dict(self) -> Dict:
        """Convert row to dictionary representation."""
        return {
            "instance": self.instance,
            "solver": self.solver,
            "psnr": self.psnr,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "objective": self.objective,
            "stop_reason": self.stop_reason,
            "error": self.error
        }


@dataclass
class BenchReport:
    """Rows of a benchmark sweep, sorted by instance then solver."""
    rows: List[BenchRow] = field(default_factory=list)

    def add(self, row: BenchRow) -> None:
        """Add a row."""
        self.rows.append(row)

    def sorted_rows(self) -> List[BenchRow]:
        """Rows ordered by (instance, solver)."""
        return sorted(self.rows, key=lambda row: (row.instance, row.solver))

    def find(self, instance: str, solver: str) -> Optional[BenchRow]:
        """Row for a pair, if present."""
        for row in self.rows:
            if row.instance == instance and row.solver == solver:
                return row
        return None

    @property
    def failures(self) -> List[BenchRow]:
        """Rows whose run raised."""
        return [row for row in self.rows if not row.ok]

    def to_csv_text(self, include_wall_time: bool = False) -> str:
        """Render as CSV; wall time only when ``include_wall_time``."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(bench_columns(include_wall_time))
        writer.writerows(row.csv_fields(include_wall_time) for row in self.sorted_rows())
        return buffer.getvalue()

    def to_dict(self) -> Dict:
        """Convert report to dictionary representation."""
        return {"rows": [row.to_dict() for row in self.sorted_rows()]}
