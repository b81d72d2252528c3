"""Relative rollout errors over branch nodes and their aggregation."""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from hemo_gnn.errors import ContractError
from hemo_gnn.graph.centerline import BRANCH, CenterlineGraph
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.mgn.model import FeaturePerturbation, GnnModel, rollout
from hemo_gnn.utils.executor import parallel_map

logger = logging.getLogger(__name__)


def relative_errors(
    predicted: np.ndarray,
    truth: np.ndarray,
    nodes: Optional[np.ndarray] = None,
) -> Tuple[float, float]:
    """Squared-error ratios sum (pred - true)^2 / sum true^2 of p and q over steps 1..M.

    Args:
        predicted: (K, N, 2) rolled-out states
        truth: (K, N, 2) ground-truth states
        nodes: Node indices or boolean mask to include; all nodes when omitted
    """
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predicted.shape != truth.shape:
        raise ContractError(f"Predicted states {predicted.shape} do not match ground truth {truth.shape}")
    if nodes is not None:
        predicted = predicted[:, nodes]
        truth = truth[:, nodes]
    predicted, truth = predicted[1:], truth[1:]
    if truth.size == 0:
        raise ContractError("Relative errors need at least one step and one node")
    squared = np.sum((predicted - truth) ** 2, axis=(0, 1))
    reference = np.sum(truth ** 2, axis=(0, 1))
    if np.any(reference == 0):
        raise ContractError("Ground truth is identically zero on the selected nodes")
    e_p, e_q = squared / reference
    return float(e_p), float(e_q)


def branch_nodes(graph: CenterlineGraph) -> np.ndarray:
    return np.flatnonzero(graph.node_type == BRANCH)


@dataclass
class RolloutResult:
    e_p: float
    e_q: float
    runtime_s: float
    predicted: Trajectory


def rollout_trajectory(
    model: GnnModel,
    graph: CenterlineGraph,
    trajectory: Trajectory,
    perturbation: Optional[FeaturePerturbation] = None,
) -> Tuple[Trajectory, float]:
    """Roll out over the whole trajectory from its first state; returns the prediction and its wall time."""
    if trajectory.n_nodes != graph.n_nodes:
        raise ContractError(f"Trajectory {trajectory.id} does not live on graph {graph.id}")
    m = trajectory.n_steps - 1
    start = time.perf_counter()
    predicted = rollout(
        model,
        graph,
        trajectory.state(0),
        trajectory.inlet_flow[1:],
        m,
        loading_schedule=trajectory.loading_flags[1:],
        perturbation=perturbation,
    )
    return predicted, time.perf_counter() - start


def rollout_errors(
    model: GnnModel,
    graph: CenterlineGraph,
    trajectory: Trajectory,
    perturbation: Optional[FeaturePerturbation] = None,
) -> RolloutResult:
    """e_p and e_q of a full rollout, measured on branch nodes only."""
    predicted, runtime = rollout_trajectory(model, graph, trajectory, perturbation)
    e_p, e_q = relative_errors(predicted.states, trajectory.states, branch_nodes(graph))
    return RolloutResult(e_p=e_p, e_q=e_q, runtime_s=runtime, predicted=predicted)


@dataclass
class TrajectoryErrors:
    trajectory_id: str
    e_p: float
    e_q: float
    runtime_s: float = 0.0
    fold: Optional[int] = None
    variant: str = "baseline"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trajectory_id": self.trajectory_id,
            "fold": self.fold,
            "e_p": self.e_p,
            "e_q": self.e_q,
            "runtime_s": self.runtime_s,
            "variant": self.variant,
        }


@dataclass
class Interval:
    mean: float
    low: float
    high: float

    def to_dict(self) -> Dict[str, float]:
        return {"mean": self.mean, "low": self.low, "high": self.high}


def confidence_interval(values: Sequence[float], confidence: float = 0.95) -> Interval:
    """Normal-approximation interval mean +- z * s / sqrt(n)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ContractError("Cannot summarize an empty set of errors")
    mean = float(values.mean())
    if values.size == 1:
        return Interval(mean, mean, mean)
    half = float(norm.ppf(0.5 + confidence / 2.0) * values.std(ddof=1) / math.sqrt(values.size))
    return Interval(mean, mean - half, mean + half)


@dataclass
class ErrorReport:
    """Per-trajectory rollout errors with fold-level summaries.

    Intervals are taken over fold means when the rows span several folds,
    over trajectories otherwise.
    """

    rows: List[TrajectoryErrors] = field(default_factory=list)
    confidence: float = 0.95

    def extend(self, rows: Sequence[TrajectoryErrors]) -> None:
        self.rows.extend(rows)

    @property
    def folds(self) -> List[int]:
        return sorted({r.fold for r in self.rows if r.fold is not None})

    def _grouped(self, attribute: str) -> List[float]:
        folds = self.folds
        if len(folds) > 1:
            return [float(np.mean([getattr(r, attribute) for r in self.rows if r.fold == f])) for f in folds]
        return [getattr(r, attribute) for r in self.rows]

    def interval(self, attribute: str) -> Interval:
        return confidence_interval(self._grouped(attribute), self.confidence)

    def for_variant(self, variant: str) -> "ErrorReport":
        return ErrorReport([r for r in self.rows if r.variant == variant], self.confidence)

    def summary(self) -> Dict[str, Any]:
        return {
            "n_trajectories": len(self.rows),
            "folds": self.folds,
            "confidence": self.confidence,
            "e_p": self.interval("e_p").to_dict(),
            "e_q": self.interval("e_q").to_dict(),
            "runtime_s": self.interval("runtime_s").to_dict(),
        }


def evaluate_model(
    model: GnnModel,
    pairs: Sequence[Tuple[CenterlineGraph, Trajectory]],
    fold: Optional[int] = None,
    variant: Optional[str] = None,
    workers: Optional[int] = None,
) -> List[TrajectoryErrors]:
    """Rollout errors of every (graph, trajectory) pair, in input order."""
    variant = variant or model.config.variant

    def evaluate(pair: Tuple[CenterlineGraph, Trajectory]) -> TrajectoryErrors:
        graph, trajectory = pair
        result = rollout_errors(model, graph, trajectory)
        logger.debug(f"{trajectory.id}: e_p={result.e_p:.3e}, e_q={result.e_q:.3e} in {result.runtime_s:.2f}s")
        return TrajectoryErrors(trajectory.id, result.e_p, result.e_q, result.runtime_s, fold, variant)

    return parallel_map(evaluate, pairs, workers=workers)
