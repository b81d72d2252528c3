"""State shared by every subcommand: global flags, lazily loaded configuration and error reporting."""

import functools
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import click

from hemo_gnn.config.loader import ConfigError, load_config
from hemo_gnn.config.settings import ABLATION_VARIANTS, HemoConfig
from hemo_gnn.config.validator import find_config_file, missing_dataset_files, validate_dataset_structure
from hemo_gnn.errors import HemoError
from hemo_gnn.mgn.checkpoint import Checkpoint, load_checkpoint

logger = logging.getLogger(__name__)


@dataclass
class CliContext:
    config_path: Optional[Path] = None
    seed: Optional[int] = None
    dt: Optional[float] = None
    _config: Optional[HemoConfig] = None

    def config(self) -> HemoConfig:
        """hemo.config.yaml with the global --seed and --dt applied."""
        if self._config is None:
            path = self.config_path or find_config_file()
            config = load_config(path) if path is not None else HemoConfig()
            if self.dt is not None:
                config = config.model_copy(update={"datagen": config.datagen.model_copy(update={"dt": self.dt})})
            if self.seed is not None:
                config = config.model_copy(update={"training": config.training.model_copy(update={"seed": self.seed})})
            self._config = config
        return self._config

    def seed_or(self, default: int = 0) -> int:
        return default if self.seed is None else self.seed

    def checkpoint(self, path: Path, variant: Optional[str] = None) -> Checkpoint:
        """Load a checkpoint; with a variant, its model configuration must match model.for_variant(variant)."""
        expected = None if variant is None else self.config().model.for_variant(variant)
        return load_checkpoint(path, expected_config=expected)


pass_cli = click.make_pass_decorator(CliContext, ensure=True)

VARIANT_OPTION = click.option(
    "--variant",
    default=None,
    type=click.Choice(ABLATION_VARIANTS),
    help="Refuse checkpoints not trained as this variant of the configured model",
)


def fail(message: str) -> None:
    click.echo(click.style(f"Error: {message}", fg="red"), err=True)
    sys.exit(1)


def success(message: str) -> None:
    click.echo(click.style(f"✓ {message}", fg="green"))


def handle_errors(command: Callable) -> Callable:
    """Turn library and configuration errors into a red message and exit status 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (HemoError, ConfigError) as e:
            logger.debug("Command failed", exc_info=True)
            fail(str(e))

    return wrapper


def require_dataset(path: Path) -> Path:
    if not validate_dataset_structure(path):
        missing = missing_dataset_files(path) if Path(path).is_dir() else ["the directory itself"]
        fail(f"{path} is not a dataset directory (missing: {', '.join(missing)})")
    return Path(path)
