"""Configuration loader for hemo-gnn projects."""

import logging
from pathlib import Path
from typing import Optional

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from hemo_gnn.config.settings import HemoConfig
from hemo_gnn.utils.constants import CONFIG_FILENAME

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Exception raised for configuration errors."""
    pass


def load_config(config_path: Optional[Path] = None) -> HemoConfig:
    """Load hemo-gnn configuration from a YAML file and environment variables.

    Args:
        config_path: Path to hemo.config.yaml. If None, searches the current
            directory and falls back to defaults when no file is present.

    Returns:
        Validated HemoConfig

    Raises:
        ConfigError: If an explicit configuration file is missing or invalid
    """
    explicit = config_path is not None
    if config_path is None:
        config_path = Path.cwd() / CONFIG_FILENAME

    if not config_path.exists():
        if explicit:
            raise ConfigError(
                f"Configuration file not found: {config_path}\n"
                f"Pass --config with a valid {CONFIG_FILENAME} or omit it to use defaults."
            )
        logger.debug(f"No {CONFIG_FILENAME} found, using defaults")
        return HemoConfig()

    # Load environment variables from .env
    env_path = config_path.parent / ".env"
    if env_path.exists():
        load_dotenv(env_path)

    try:
        with open(config_path, "r") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse configuration file: {e}")

    if not raw:
        raise ConfigError("Configuration file is empty")

    if not isinstance(raw, dict):
        raise ConfigError("Configuration file must contain a mapping of sections")

    try:
        return HemoConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {config_path}:\n{e}")


def dump_config(config: HemoConfig, path: Path) -> None:
    """Write a configuration back to YAML (used to record the settings of a run)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(config.model_dump(mode="json"), f, sort_keys=True)
