"""Model checkpoints: parameters, optimizer state, normalization statistics and a config hash."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from hemo_gnn.config.settings import ModelConfig, TrainConfig, config_hash
from hemo_gnn.errors import CheckpointError, HemoError
from hemo_gnn.mgn.model import GnnModel
from hemo_gnn.nn.optim import AdamState
from hemo_gnn.utils.constants import SCHEMA_VERSION

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    model: GnnModel
    adam: Optional[AdamState] = None
    training: Optional[TrainConfig] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.model.config)


def save_checkpoint(
    path: Path,
    model: GnnModel,
    adam: Optional[AdamState] = None,
    training: Optional[TrainConfig] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a checkpoint as JSON; the hash covers the model configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config_hash(model.config),
        "model": model.to_dict(),
        "adam": None if adam is None else adam.to_dict(),
        "training": None if training is None else training.model_dump(mode="json"),
        "meta": meta or {},
    }
    path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    logger.debug(f"Saved checkpoint {path} ({payload['config_hash'][:12]})")
    return path


def load_checkpoint(path: Path, expected_config: Optional[ModelConfig] = None) -> Checkpoint:
    """Read a checkpoint and verify its config hash.

    Args:
        path: Checkpoint file
        expected_config: When given, the stored model configuration must hash to the same value

    Raises:
        CheckpointError: Unreadable file, tampered configuration or hash mismatch
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"Checkpoint {path} is not valid JSON: {e}") from e

    if payload.get("schema_version") != SCHEMA_VERSION:
        raise CheckpointError(f"Checkpoint {path} has schema version {payload.get('schema_version')}")
    try:
        model = GnnModel.from_dict(payload["model"])
        training = None if payload.get("training") is None else TrainConfig.model_validate(payload["training"])
    except (KeyError, ValidationError, HemoError) as e:
        raise CheckpointError(f"Checkpoint {path} is malformed: {e}") from e

    stored = payload.get("config_hash")
    actual = config_hash(model.config)
    if stored != actual:
        raise CheckpointError(f"Checkpoint {path} config hash does not match its stored configuration")
    if expected_config is not None and config_hash(expected_config) != actual:
        raise CheckpointError(
            f"Checkpoint {path} was trained with a different model configuration "
            f"(variant '{model.config.variant}', expected '{expected_config.variant}')"
        )

    adam = None
    if payload.get("adam") is not None:
        try:
            adam = AdamState.from_dict(payload["adam"], model.params.arrays())
        except (KeyError, TypeError, ValueError, HemoError) as e:
            raise CheckpointError(f"Checkpoint {path} has unusable optimizer state: {e}") from e
    return Checkpoint(model=model, adam=adam, training=training, meta=payload.get("meta", {}))
