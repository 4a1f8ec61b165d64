"""
Artifact writers. Floats are written with repr (shortest round-trip form) and
rows end in a bare newline, so identical runs give byte-identical files.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import astuple, fields
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np
import yaml

from asymptotics import ComparisonReport, ComparisonRow
from history import TrajectoryHistory
from integrator import StepDiagnostics

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("s", "ct", "x", "y", "z", "u0", "u1", "u2", "u3", "a0", "a1", "a2", "a3")
DIAGNOSTIC_COLUMNS = tuple(f.name for f in fields(StepDiagnostics))
COMPARISON_COLUMNS = ("sigma",) + tuple(f.name for f in fields(ComparisonRow))
FIELD_MAP_COLUMNS = ("ct", "x", "y", "z", "A0", "A1", "A2", "A3", "branch", "status")

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        # float() strips numpy scalar types, whose repr is not a bare number
        return repr(float(value))
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]], preamble: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        for line in preamble:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info(f"wrote {count} rows to {path}")
    return path


def write_trajectory(path: PathLike, history: TrajectoryHistory) -> Path:
    return write_csv(path, TRAJECTORY_COLUMNS, history.rows())


def write_diagnostics(path: PathLike, diagnostics: Sequence[StepDiagnostics]) -> Path:
    return write_csv(path, DIAGNOSTIC_COLUMNS, (astuple(d) for d in diagnostics))


def write_comparison(path: PathLike, reports: Sequence[ComparisonReport]) -> Path:
    """Deviation table for one or more sigma values, followed by the power-law fit block."""
    rows = [(report.sigma, *astuple(row)) for report in reports for row in report.rows]
    path = write_csv(path, COMPARISON_COLUMNS, rows)
    fit = next((r.fit for r in reports if r.fit is not None), None)
    with Path(path).open("a", newline="") as handle:
        handle.write("# fit\n")
        for report in reports:
            handle.write(
                f"# sigma={format_value(report.sigma)} mean_deviation={format_value(report.mean_deviation)} "
                f"max_deviation={format_value(report.max_deviation)} max_epsilon={format_value(report.max_epsilon)}\n"
            )
        if fit is not None:
            handle.write(
                f"# exponent={format_value(fit.exponent)} prefactor={format_value(fit.prefactor)} points={fit.points}\n"
            )
    return path


def write_field_map(path: PathLike, rows: Iterable[Sequence[Any]]) -> Path:
    return write_csv(path, FIELD_MAP_COLUMNS, rows)


def plain(value: Any) -> Any:
    """Nested structure with numpy scalars and arrays turned into builtins (for YAML/JSON)."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_summary(path: PathLike, summary: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(plain(summary), sort_keys=False))
    logger.info(f"wrote summary to {path}")
    return path
