"""Standard-Gaussian normalization of node features, edge features and output increments."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from hemo_gnn.errors import NormalizationError
from hemo_gnn.graph.centerline import CenterlineGraph
from hemo_gnn.graph.features import edge_feature_matrix, static_node_features
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.utils.constants import (
    EDGE_FEATURES,
    EDGE_FEATURE_WIDTH,
    NODE_FEATURES,
    NODE_FEATURE_WIDTH,
    OUTPUT_WIDTH,
    UNNORMALIZED_EDGE_FEATURES,
    UNNORMALIZED_NODE_FEATURES,
    feature_channels,
)

logger = logging.getLogger(__name__)

FAMILIES = {NODE_FEATURE_WIDTH: "node", EDGE_FEATURE_WIDTH: "edge", OUTPUT_WIDTH: "output"}


@dataclass(frozen=True)
class ChannelStats:
    """Mean and standard deviation per channel; excluded channels pass through unchanged."""

    mean: np.ndarray
    std: np.ndarray
    excluded: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        excluded = np.asarray(self.excluded, dtype=bool)
        if not (mean.shape == std.shape == excluded.shape) or mean.ndim != 1:
            raise NormalizationError("mean, std and excluded must be 1D arrays of equal length")
        if np.any(std <= 0):
            raise NormalizationError("Standard deviations must be positive")
        # excluded channels behave as mean 0, std 1
        mean = np.where(excluded, 0.0, mean)
        std = np.where(excluded, 1.0, std)
        for name, value in (("mean", mean), ("std", std), ("excluded", excluded)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def width(self) -> int:
        return self.mean.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return x * self.std + self.mean

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "excluded": self.excluded.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChannelStats":
        return cls(mean=data["mean"], std=data["std"], excluded=data["excluded"])


@dataclass(frozen=True)
class NormStats:
    node: ChannelStats
    edge: ChannelStats
    output: ChannelStats

    def family(self, name: str) -> ChannelStats:
        if name not in ("node", "edge", "output"):
            raise NormalizationError(f"Unknown statistics family '{name}'")
        return getattr(self, name)

    @property
    def state_std(self) -> np.ndarray:
        """Node-feature std of the pressure and flow channels."""
        return self.node.std[:2]

    def to_dict(self) -> Dict[str, Any]:
        return {"node": self.node.to_dict(), "edge": self.edge.to_dict(), "output": self.output.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NormStats":
        try:
            stats = cls(
                node=ChannelStats.from_dict(data["node"]),
                edge=ChannelStats.from_dict(data["edge"]),
                output=ChannelStats.from_dict(data["output"]),
            )
        except KeyError as e:
            raise NormalizationError(f"Normalization statistics missing section {e}") from e
        for name, width in (("node", NODE_FEATURE_WIDTH), ("edge", EDGE_FEATURE_WIDTH), ("output", OUTPUT_WIDTH)):
            if stats.family(name).width != width:
                raise NormalizationError(f"{name} statistics need {width} channels")
        return stats


class _RunningMoments:
    """Per-channel count, mean and sum of squared deviations merged block by block."""

    def __init__(self, width: int):
        self.count = 0.0
        self.mean = np.zeros(width)
        self.m2 = np.zeros(width)

    def update(self, block: np.ndarray, weight: float = 1.0) -> None:
        if block.shape[0] == 0:
            return
        n_b = block.shape[0] * weight
        mean_b = block.mean(axis=0)
        m2_b = ((block - mean_b) ** 2).sum(axis=0) * weight
        total = self.count + n_b
        delta = mean_b - self.mean
        self.mean = self.mean + delta * (n_b / total)
        self.m2 = self.m2 + m2_b + delta ** 2 * (self.count * n_b / total)
        self.count = total

    def finalize(self, excluded: np.ndarray) -> ChannelStats:
        if self.count == 0:
            return ChannelStats(mean=np.zeros_like(self.mean), std=np.ones_like(self.mean), excluded=excluded)
        std = np.sqrt(self.m2 / self.count)
        degenerate = (std == 0) | (std < 1e-12 * np.abs(self.mean))
        std = np.where(degenerate, 1.0, std)
        return ChannelStats(mean=self.mean.copy(), std=std, excluded=excluded)


def _excluded(layout: dict, names, width: int) -> np.ndarray:
    mask = np.zeros(width, dtype=bool)
    mask[feature_channels(layout, names)] = True
    return mask


def trajectory_node_features(graph: CenterlineGraph, trajectory: Trajectory) -> np.ndarray:
    """(K, N, 17) node features of every state of a trajectory."""
    shape = (trajectory.n_steps, graph.n_nodes, NODE_FEATURE_WIDTH)
    features = np.broadcast_to(static_node_features(graph), shape).copy()
    features[:, :, 0] = trajectory.pressure
    features[:, :, 1] = trajectory.flow
    features[:, :, 16] = trajectory.loading_flags[:, None]
    return features


def fit_normalization(samples: Iterable[Tuple[CenterlineGraph, Trajectory]]) -> NormStats:
    """Fit per-channel statistics over every node, edge and time step of a dataset.

    Edge features are static, so each graph's edges count once per stored
    state. Output statistics are taken over consecutive-state differences.
    """
    node = _RunningMoments(NODE_FEATURE_WIDTH)
    edge = _RunningMoments(EDGE_FEATURE_WIDTH)
    output = _RunningMoments(OUTPUT_WIDTH)
    n_samples = 0
    for graph, trajectory in samples:
        if trajectory.n_nodes != graph.n_nodes:
            raise NormalizationError(
                f"Trajectory {trajectory.id} has {trajectory.n_nodes} nodes, graph has {graph.n_nodes}"
            )
        node.update(trajectory_node_features(graph, trajectory).reshape(-1, NODE_FEATURE_WIDTH))
        edge.update(edge_feature_matrix(graph), weight=trajectory.n_steps)
        output.update(np.diff(trajectory.states, axis=0).reshape(-1, OUTPUT_WIDTH))
        n_samples += 1
    if n_samples == 0:
        raise NormalizationError("Cannot fit normalization statistics on an empty dataset")

    logger.debug(f"Fitted normalization statistics on {n_samples} trajectories")
    return NormStats(
        node=node.finalize(_excluded(NODE_FEATURES, UNNORMALIZED_NODE_FEATURES, NODE_FEATURE_WIDTH)),
        edge=edge.finalize(_excluded(EDGE_FEATURES, UNNORMALIZED_EDGE_FEATURES, EDGE_FEATURE_WIDTH)),
        output=output.finalize(np.zeros(OUTPUT_WIDTH, dtype=bool)),
    )


def apply_normalization(
    stats: NormStats,
    vector: np.ndarray,
    direction: str = "forward",
    family: Optional[str] = None,
) -> np.ndarray:
    """Normalize (forward) or de-normalize (inverse) along the last axis.

    The statistics family is inferred from the channel count unless given.
    """
    vector = np.asarray(vector, dtype=float)
    if family is None:
        if vector.ndim == 0:
            raise NormalizationError("Cannot normalize a scalar")
        family = FAMILIES.get(vector.shape[-1])
        if family is None:
            raise NormalizationError(f"No statistics for vectors with {vector.shape[-1]} channels")
    channel_stats = stats.family(family)
    if vector.shape[-1] != channel_stats.width:
        raise NormalizationError(
            f"Expected {channel_stats.width} channels for {family} features, got {vector.shape[-1]}"
        )
    if direction == "forward":
        return channel_stats.forward(vector)
    if direction == "inverse":
        return channel_stats.inverse(vector)
    raise NormalizationError(f"Unknown direction '{direction}', use forward or inverse")
