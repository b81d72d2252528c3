"""Configuration loading and management."""

from hemo_gnn.config.loader import (
    load_config,
    dump_config,
    ConfigError,
)
from hemo_gnn.config.settings import (
    DatagenSettings,
    EvaluationSettings,
    HemoConfig,
    ModelConfig,
    SolverConfig,
    TrainConfig,
    WallConfig,
    config_hash,
)

__all__ = [
    "load_config",
    "dump_config",
    "ConfigError",
    "DatagenSettings",
    "EvaluationSettings",
    "HemoConfig",
    "ModelConfig",
    "SolverConfig",
    "TrainConfig",
    "WallConfig",
    "config_hash",
]
