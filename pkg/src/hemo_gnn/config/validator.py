"""Dataset and project directory validation utilities."""

from pathlib import Path
from typing import List, Optional

from hemo_gnn.utils.constants import CONFIG_FILENAME

DATASET_REQUIRED = ["manifest.json", "graphs", "trajectories"]


def missing_dataset_files(base_path: Path) -> List[str]:
    """Names of the required dataset entries absent from base_path."""
    return [required for required in DATASET_REQUIRED if not (Path(base_path) / required).exists()]


def validate_dataset_structure(base_path: Path) -> bool:
    """Validate that a directory looks like a dataset written by `hemo-gnn gen`.

    Args:
        base_path: Dataset directory

    Returns:
        True if valid dataset structure, False otherwise
    """
    return Path(base_path).is_dir() and not missing_dataset_files(base_path)


def find_config_file(base_path: Optional[Path] = None) -> Optional[Path]:
    """Find hemo.config.yaml in base_path or any parent directory.

    Args:
        base_path: Directory to start from. If None, uses current directory.

    Returns:
        Path to the configuration file, or None if not found
    """
    if base_path is None:
        base_path = Path.cwd()

    for directory in [base_path, *base_path.parents]:
        candidate = directory / CONFIG_FILENAME
        if candidate.exists():
            return candidate

    return None
