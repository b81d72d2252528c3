"""Strided MSE: the network rolls out s steps from a noisy state and every step is compared to ground truth.

Errors are measured in normalized units (node-feature std of p and q).
Step l carries weight 1 for l = 1 and `later_step_weight` afterwards;
inlet and outlet nodes carry `boundary_weight`. Each sample's sum is
divided by its node count and the batch loss is the mean over samples.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hemo_gnn.config.settings import TrainConfig
from hemo_gnn.errors import ContractError
from hemo_gnn.graph.centerline import CenterlineGraph
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.mgn.model import GnnModel, ParameterSet
from hemo_gnn.mgn.tensors import GraphTensors, concatenate
from hemo_gnn.training.noise import perturb_state_arrays

logger = logging.getLogger(__name__)


@dataclass
class LossSample:
    """Start step k of a trajectory living on the given graph tensors."""

    tensors: GraphTensors
    trajectory: Trajectory
    k: int


def step_weights(stride: int, later_step_weight: float) -> np.ndarray:
    weights = np.full(stride, later_step_weight, dtype=float)
    weights[0] = 1.0
    return weights


def _check_window(trajectory: Trajectory, k: int, stride: int) -> None:
    if stride < 1:
        raise ContractError(f"Stride must be at least 1, got {stride}")
    if k < 0 or k + stride > trajectory.n_steps - 1:
        raise ContractError(
            f"Window [{k}, {k + stride}] exceeds trajectory {trajectory.id or ''} with {trajectory.n_steps} states"
        )


def batch_loss(
    model: GnnModel,
    samples: Sequence[LossSample],
    config: TrainConfig,
    rng: Optional[np.random.Generator] = None,
    with_grad: bool = True,
) -> Tuple[float, Optional[ParameterSet]]:
    """Mean strided loss over samples and, optionally, its parameter gradients."""
    if not samples:
        raise ContractError("A loss batch needs at least one sample")
    stride = config.stride
    for sample in samples:
        _check_window(sample.trajectory, sample.k, stride)

    stats = model.require_stats()
    sigma_p, sigma_q = stats.state_std
    tensors = samples[0].tensors if len(samples) == 1 else concatenate([s.tensors for s in samples])
    n_graphs = len(samples)

    def gather(step_offset: int, channel: int) -> np.ndarray:
        return np.concatenate([s.trajectory.states[s.k + step_offset, :, channel] for s in samples])

    p, q = gather(0, 0), gather(0, 1)
    if config.noise_std > 0:
        if rng is None:
            raise ContractError("Noise injection needs a random generator")
        p, q = perturb_state_arrays(p, q, config.noise_std, rng, scale=(sigma_p, sigma_q))

    a = step_weights(stride, config.later_step_weight)
    b = np.where(tensors.boundary_node_mask, config.boundary_weight, 1.0)
    # per-node factor turning node sums into per-graph means averaged over the batch
    node_scale = b / tensors.per_node(tensors.n_nodes_per_graph) / n_graphs

    caches = []
    residuals: List[Tuple[np.ndarray, np.ndarray]] = []
    total = 0.0
    for l in range(1, stride + 1):
        loading = np.concatenate(
            [np.full(s.trajectory.n_nodes, float(s.k + l - 1 < s.trajectory.loading_steps)) for s in samples]
        )
        next_inlet = np.array([s.trajectory.inlet_flow[s.k + l] for s in samples])
        p, q, cache = model.forward_step(tensors, p, q, loading, next_inlet)
        caches.append(cache)
        e_p = (p - gather(l, 0)) / sigma_p
        e_q = (q - gather(l, 1)) / sigma_q
        residuals.append((e_p, e_q))
        total += a[l - 1] * float(np.sum(node_scale * (e_p ** 2 + e_q ** 2)))

    if not with_grad:
        return total, None

    grads = model.params.zeros_like()
    g_p = np.zeros(tensors.n_nodes)
    g_q = np.zeros(tensors.n_nodes)
    for l in range(stride, 0, -1):
        e_p, e_q = residuals[l - 1]
        g_p = g_p + 2.0 * a[l - 1] * node_scale * e_p / sigma_p
        g_q = g_q + 2.0 * a[l - 1] * node_scale * e_q / sigma_q
        g_p, g_q = model.backward_step(tensors, caches[l - 1], g_p, g_q, grads)
    return total, grads


def strided_loss(
    model: GnnModel,
    graph: CenterlineGraph,
    trajectory: Trajectory,
    k: int,
    s: Optional[int] = None,
    config: Optional[TrainConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Strided loss of one trajectory window starting at step k.

    Without a generator the window is scored clean, whatever noise_std says.
    """
    config = config or TrainConfig()
    if s is not None:
        config = config.model_copy(update={"stride": s})
    if rng is None and config.noise_std > 0:
        config = config.model_copy(update={"noise_std": 0.0})
    sample = LossSample(tensors=model.tensors(graph), trajectory=trajectory, k=k)
    loss, _ = batch_loss(model, [sample], config, rng=rng, with_grad=False)
    return loss
