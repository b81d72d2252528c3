"""Logging setup and the JSON-lines run log written next to training, generation and evaluation outputs."""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

logger = logging.getLogger(__name__)


def _to_json(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def log_run_event(
    logs_dir: Path,
    run_name: str,
    event: str,
    payload: Dict[str, Any],
    duration_ms: Optional[float] = None,
    error: Optional[str] = None,
) -> None:
    """Append one event to logs_dir/<run_name>.log.

    Args:
        logs_dir: Directory of the run logs, created on demand
        run_name: Log file stem, e.g. 'baseline_fold0' or 'gen'
        event: Event kind: 'epoch', 'simulation', ...
        payload: Event fields; numpy scalars and arrays are converted
        duration_ms: Wall-clock duration of the step
        error: Failure message; marks the event unsuccessful
    """
    record = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "run": run_name,
        "event": event,
        **payload,
        "success": error is None,
    }
    if duration_ms is not None:
        record["duration_ms"] = round(float(duration_ms), 2)
    if error is not None:
        record["error"] = error

    logs_dir = Path(logs_dir)
    try:
        logs_dir.mkdir(parents=True, exist_ok=True)
        with open(logs_dir / f"{run_name}.log", "a") as f:
            f.write(json.dumps(record, default=_to_json) + "\n")
    except (OSError, TypeError) as e:
        logger.error(f"Failed to write run log for {run_name}: {e}")


def setup_logging(log_level: str = "WARNING") -> None:
    """Configure the root logger; later calls replace the earlier level and handler."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )
