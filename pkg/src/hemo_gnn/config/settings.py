"""Typed configuration sections for hemo-gnn."""

import hashlib
import json
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from hemo_gnn.utils.constants import (
    ABLATION_VARIANTS,
    DEFAULT_DENSITY,
    DEFAULT_KINEMATIC_VISCOSITY,
    EDGE_FEATURES,
    EDGE_FEATURE_WIDTH,
    LOADING_TIME,
    NODE_FEATURES,
    NODE_FEATURE_WIDTH,
    RCR_NODE_FEATURES,
    RIGID_K1,
    RIGID_K2,
    RIGID_K3,
    TAU_EDGE_FEATURES,
    TAU_NODE_FEATURES,
    feature_channels,
)


class SolverConfig(BaseModel):
    """Settings of the physics-based 1D solver."""

    model_config = ConfigDict(extra="forbid")

    dt: float = Field(1e-3, gt=0)
    newton_tol: float = Field(1e-8, gt=0)
    newton_max_iter: int = Field(30, ge=1)
    junction_tol: float = Field(1e-10, gt=0)
    kinematic_viscosity: float = Field(DEFAULT_KINEMATIC_VISCOSITY, gt=0)
    density: float = Field(DEFAULT_DENSITY, gt=0)

    @property
    def viscosity(self) -> float:
        """Dynamic viscosity mu = rho * nu."""
        return self.density * self.kinematic_viscosity


class WallConfig(BaseModel):
    """Olufsen wall-law constants; the defaults emulate a rigid wall."""

    model_config = ConfigDict(extra="forbid")

    k1: float = RIGID_K1
    k2: float = RIGID_K2
    k3: float = RIGID_K3


class ModelConfig(BaseModel):
    """Architecture of the graph network surrogate."""

    model_config = ConfigDict(extra="forbid")

    latent_size: int = Field(16, ge=1)
    hidden_layers: int = Field(2, ge=0)
    hidden_width: int = Field(64, ge=1)
    processing_iterations: int = Field(5, ge=1)
    leaky_slope: float = 0.01
    boundary_edges: bool = True
    node_channels: Optional[List[int]] = None
    edge_channels: Optional[List[int]] = None
    variant: str = "baseline"
    seed: int = 0

    @model_validator(mode="after")
    def _check_channels(self):
        if self.node_channels is not None:
            if not self.node_channels or not set(self.node_channels) <= set(range(NODE_FEATURE_WIDTH)):
                raise ValueError("node_channels must be a non-empty subset of 0..16")
            if 0 not in self.node_channels or 1 not in self.node_channels:
                raise ValueError("node_channels must keep the pressure (0) and flow (1) channels")
        if self.edge_channels is not None:
            if not self.edge_channels or not set(self.edge_channels) <= set(range(EDGE_FEATURE_WIDTH)):
                raise ValueError("edge_channels must be a non-empty subset of 0..7")
        if self.variant not in ABLATION_VARIANTS:
            raise ValueError(f"Unknown variant '{self.variant}'. Available: {', '.join(ABLATION_VARIANTS)}")
        return self

    @property
    def active_node_channels(self) -> List[int]:
        return sorted(self.node_channels) if self.node_channels is not None else list(range(NODE_FEATURE_WIDTH))

    @property
    def active_edge_channels(self) -> List[int]:
        return sorted(self.edge_channels) if self.edge_channels is not None else list(range(EDGE_FEATURE_WIDTH))

    def for_variant(self, variant: str) -> "ModelConfig":
        """Return a copy configured for an ablation variant."""
        if variant not in ABLATION_VARIANTS:
            raise ValueError(f"Unknown variant '{variant}'. Available: {', '.join(ABLATION_VARIANTS)}")

        all_nodes = set(range(NODE_FEATURE_WIDTH))
        all_edges = set(range(EDGE_FEATURE_WIDTH))
        update = {"variant": variant, "node_channels": None, "edge_channels": None, "boundary_edges": True}
        if variant == "no_tau":
            update["node_channels"] = sorted(all_nodes - set(feature_channels(NODE_FEATURES, TAU_NODE_FEATURES)))
            update["edge_channels"] = sorted(all_edges - set(feature_channels(EDGE_FEATURES, TAU_EDGE_FEATURES)))
        elif variant == "no_rcr":
            update["node_channels"] = sorted(all_nodes - set(feature_channels(NODE_FEATURES, RCR_NODE_FEATURES)))
        elif variant == "no_boundary_edges":
            update["boundary_edges"] = False
        return self.model_copy(update=update)


class TrainConfig(BaseModel):
    """Optimisation settings for the strided-loss training loop."""

    model_config = ConfigDict(extra="forbid")

    stride: int = Field(5, ge=1)
    noise_std: float = Field(5e-2, ge=0)
    batch_size: int = Field(100, ge=1)
    epochs: Optional[int] = Field(None, ge=1)
    multi_geometry_epochs: int = Field(100, ge=1)
    single_geometry_epochs: int = Field(500, ge=1)
    lr0: float = Field(1e-3, gt=0)
    lr_final: float = Field(1e-6, gt=0)
    boundary_weight: float = Field(100.0, ge=0)
    later_step_weight: float = Field(0.5, ge=0)
    k_folds: int = Field(5, ge=2)
    seed: int = 0

    def resolve_epochs(self, n_geometries: int) -> int:
        """Epoch count, falling back to the single/multi-geometry defaults."""
        if self.epochs is not None:
            return self.epochs
        return self.single_geometry_epochs if n_geometries <= 1 else self.multi_geometry_epochs


class DatagenSettings(BaseModel):
    """Dataset generation settings."""

    model_config = ConfigDict(extra="forbid")

    dt: float = Field(0.01, gt=0)
    loading_time: float = Field(LOADING_TIME, ge=0)
    n_offsets: int = Field(4, ge=1)
    n_cycles: int = Field(2, ge=1)
    perturbation_low: float = Field(0.8, gt=0)
    perturbation_high: float = Field(1.2, gt=0)
    workers: Optional[int] = None
    wall: WallConfig = Field(default_factory=WallConfig)

    @model_validator(mode="after")
    def _check_range(self):
        if self.perturbation_high < self.perturbation_low:
            raise ValueError("perturbation_high must be >= perturbation_low")
        return self


class EvaluationSettings(BaseModel):
    """Evaluation, sensitivity and reporting settings."""

    model_config = ConfigDict(extra="forbid")

    sensitivity_std: float = Field(0.05, ge=0)
    curve_nodes: int = Field(20, ge=1)
    confidence: Literal[0.9, 0.95, 0.99] = 0.95
    workers: Optional[int] = None


class HemoConfig(BaseModel):
    """Root of hemo.config.yaml."""

    model_config = ConfigDict(extra="forbid")

    solver: SolverConfig = Field(default_factory=SolverConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainConfig = Field(default_factory=TrainConfig)
    datagen: DatagenSettings = Field(default_factory=DatagenSettings)
    evaluation: EvaluationSettings = Field(default_factory=EvaluationSettings)


def config_hash(*sections: BaseModel) -> str:
    """Stable SHA-256 over the JSON dump of the given config sections."""
    payload = [section.model_dump(mode="json") for section in sections]
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
