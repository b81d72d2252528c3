"""CSV and JSON report writers, and run-log summaries."""

import csv
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from hemo_gnn.errors import DatasetError
from hemo_gnn.evaluation.comparison import CURVE_COLUMNS
from hemo_gnn.evaluation.metrics import ErrorReport, TrajectoryErrors
from hemo_gnn.utils.constants import SCHEMA_VERSION

logger = logging.getLogger(__name__)

ERROR_COLUMNS = ["trajectory_id", "fold", "e_p", "e_q", "runtime_s", "variant"]
ERRORS_FILENAME = "errors.csv"
SUMMARY_FILENAME = "summary.json"
CURVES_FILENAME = "curves.csv"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """Write rows with a fixed column order; floats keep full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def write_json(path: Path, payload: Mapping[str, Any]) -> Path:
    """Write a versioned JSON document with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_error_table(path: Path, rows: Sequence[TrajectoryErrors]) -> Path:
    return write_csv(path, ERROR_COLUMNS, (r.to_dict() for r in rows))


def read_error_table(path: Path) -> List[TrajectoryErrors]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Error table not found: {path}")
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = set(ERROR_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise DatasetError(f"Error table {path} is missing columns: {', '.join(sorted(missing))}")
        for record in reader:
            rows.append(
                TrajectoryErrors(
                    trajectory_id=record["trajectory_id"],
                    e_p=float(record["e_p"]),
                    e_q=float(record["e_q"]),
                    runtime_s=float(record["runtime_s"]),
                    fold=int(record["fold"]) if record["fold"] else None,
                    variant=record["variant"],
                )
            )
    return rows


def error_summary(report: ErrorReport) -> Dict[str, Any]:
    """Summary per variant, keyed by variant name."""
    variants = sorted({r.variant for r in report.rows})
    return {"variants": {v: report.for_variant(v).summary() for v in variants}}


def write_error_report(out_dir: Path, report: ErrorReport, extra: Optional[Mapping[str, Any]] = None) -> Path:
    """errors.csv and summary.json under out_dir; returns the summary path."""
    out_dir = Path(out_dir)
    write_error_table(out_dir / ERRORS_FILENAME, report.rows)
    return write_json(out_dir / SUMMARY_FILENAME, {**error_summary(report), **(extra or {})})


def write_curves(path: Path, rows: Iterable[Mapping[str, Any]]) -> Path:
    return write_csv(path, CURVE_COLUMNS, rows)


# ----------------------------------------------------------------------
# Run logs
# ----------------------------------------------------------------------


@dataclass
class RunSummary:
    """Aggregated view of one JSON-lines run log."""

    run: str
    event_count: int = 0
    success_count: int = 0
    error_count: int = 0
    last_event_ts: Optional[datetime] = None
    total_duration_ms: float = 0.0
    avg_duration_ms: Optional[float] = None
    last_train_loss: Optional[float] = None
    best_test_loss: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run": self.run,
            "event_count": self.event_count,
            "success_count": self.success_count,
            "error_count": self.error_count,
            "last_event_ts": self.last_event_ts.isoformat() if self.last_event_ts else None,
            "total_duration_ms": round(self.total_duration_ms, 2),
            "avg_duration_ms": round(self.avg_duration_ms, 2) if self.avg_duration_ms is not None else None,
            "last_train_loss": self.last_train_loss,
            "best_test_loss": self.best_test_loss,
        }


def summarize_run_log(log_file: Path) -> RunSummary:
    """Scan a run log written by log_run_event; unreadable lines are skipped."""
    log_file = Path(log_file)
    summary = RunSummary(run=log_file.stem)
    if not log_file.exists():
        return summary

    durations: List[float] = []
    with open(log_file, "r") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue

            summary.event_count += 1
            if entry.get("success", True):
                summary.success_count += 1
            else:
                summary.error_count += 1

            ts_str = entry.get("timestamp")
            if ts_str:
                try:
                    ts = datetime.fromisoformat(ts_str)
                    if ts.tzinfo is None:
                        ts = ts.replace(tzinfo=timezone.utc)
                    if summary.last_event_ts is None or ts > summary.last_event_ts:
                        summary.last_event_ts = ts
                except ValueError:
                    pass

            duration = entry.get("duration_ms")
            if isinstance(duration, (int, float)):
                durations.append(duration)

            train_loss = entry.get("train_loss")
            if isinstance(train_loss, (int, float)):
                summary.last_train_loss = float(train_loss)
            test_loss = entry.get("test_loss")
            if isinstance(test_loss, (int, float)):
                if summary.best_test_loss is None or test_loss < summary.best_test_loss:
                    summary.best_test_loss = float(test_loss)

    if durations:
        summary.total_duration_ms = sum(durations)
        summary.avg_duration_ms = summary.total_duration_ms / len(durations)
    return summary


def summarize_logs(logs_dir: Path) -> List[RunSummary]:
    """Summaries of every *.log file in a directory, sorted by run name."""
    logs_dir = Path(logs_dir)
    if not logs_dir.is_dir():
        return []
    return [summarize_run_log(path) for path in sorted(logs_dir.glob("*.log"))]
