"""Encode-process-decode graph network that advances nodal pressure and flow by one time step.

Node and edge features are normalized and encoded into latents of width
n_l. Each of the L processing iterations updates edge latents from their
endpoints and node latents from the sum of incoming edge latents, with
separate sums over inlet-type and outlet-type boundary edges. Both updates
carry residual connections. The decoder maps node latents to normalized
increments (dp, dq), which are de-normalized and added to the state; the
inlet flow is then overwritten with its prescribed value.

Every forward method returns the caches its backward counterpart needs, so
gradients of losses over multi-step rollouts can be chained by hand.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from hemo_gnn.config.settings import ModelConfig
from hemo_gnn.errors import ContractError, NormalizationError, NumericalError, RolloutDivergenceError
from hemo_gnn.graph.centerline import CenterlineGraph
from hemo_gnn.graph.normalization import NormStats
from hemo_gnn.graph.state import NodeState, Trajectory
from hemo_gnn.mgn.tensors import GraphTensors
from hemo_gnn.nn.mlp import MlpCache, MlpParams, init_mlp, mlp_backward, mlp_forward
from hemo_gnn.utils.constants import OUTPUT_WIDTH

logger = logging.getLogger(__name__)


@dataclass
class LatentGraph:
    """Node latents v (N, n_l) and edge latents w (E, n_l) after iteration l."""

    v: np.ndarray
    w: np.ndarray
    l: int = 0


@dataclass
class FeaturePerturbation:
    """Gaussian noise added to chosen normalized feature channels on every forward step."""

    family: str
    channels: List[int]
    std: float
    rng: np.random.Generator

    def apply(self, family: str, features: np.ndarray) -> np.ndarray:
        if family != self.family or self.std == 0 or not self.channels:
            return features
        noisy = features.copy()
        noisy[:, self.channels] += self.rng.normal(0.0, self.std, size=(features.shape[0], len(self.channels)))
        return noisy


class ParameterSet:
    """Named MLPs of a model in a fixed order."""

    def __init__(self, mlps: Dict[str, MlpParams]):
        self._mlps = dict(mlps)

    def __getitem__(self, name: str) -> MlpParams:
        return self._mlps[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._mlps)

    def items(self):
        return self._mlps.items()

    def arrays(self) -> List[np.ndarray]:
        return [a for mlp in self._mlps.values() for a in mlp.arrays()]

    def names(self) -> List[str]:
        return [f"{name}.{a}" for name, mlp in self._mlps.items() for a in mlp.names()]

    def bump(self) -> None:
        for mlp in self._mlps.values():
            mlp.bump()

    def zeros_like(self) -> "ParameterSet":
        return ParameterSet({name: mlp.zeros_like() for name, mlp in self._mlps.items()})

    def accumulate(self, name: str, grads: MlpParams) -> None:
        for target, value in zip(self._mlps[name].arrays(), grads.arrays()):
            target += value

    def scale(self, factor: float) -> None:
        for array in self.arrays():
            array *= factor

    def to_dict(self) -> Dict[str, Any]:
        return {"order": list(self._mlps), "mlps": {name: mlp.to_dict() for name, mlp in self._mlps.items()}}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ParameterSet":
        """Rebuild the MLPs in their stored order; JSON key order is not relied on."""
        mlps = data["mlps"]
        order = data["order"]
        if sorted(order) != sorted(mlps):
            raise ContractError("Parameter order does not list the stored networks")
        return cls({name: MlpParams.from_dict(mlps[name]) for name in order})


@dataclass
class StepCache:
    encoder: Tuple[MlpCache, MlpCache]
    processors: List[Tuple[MlpCache, MlpCache]] = field(default_factory=list)
    decoder: Optional[MlpCache] = None


def _scatter_sum(values: np.ndarray, index: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, values.shape[1]))
    np.add.at(out, index, values)
    return out


class GnnModel:
    """MLP parameters, normalization statistics and feature masks of the surrogate."""

    def __init__(
        self,
        config: Optional[ModelConfig] = None,
        stats: Optional[NormStats] = None,
        params: Optional[ParameterSet] = None,
    ):
        self.config = config or ModelConfig()
        self.stats = stats
        self.node_channels = np.array(self.config.active_node_channels, dtype=int)
        self.edge_channels = np.array(self.config.active_edge_channels, dtype=int)
        self.params = params if params is not None else self._init_params()
        self._check_widths()

    def _init_params(self) -> ParameterSet:
        c = self.config
        rng = np.random.default_rng(c.seed)
        shape = dict(hidden_layers=c.hidden_layers, hidden_width=c.hidden_width, leaky_slope=c.leaky_slope)
        n_l = c.latent_size
        mlps = {
            "node_encoder": init_mlp(len(self.node_channels), n_l, rng=rng, **shape),
            "edge_encoder": init_mlp(len(self.edge_channels), n_l, rng=rng, **shape),
        }
        for l in range(1, c.processing_iterations + 1):
            mlps[f"edge_processor_{l}"] = init_mlp(3 * n_l, n_l, rng=rng, **shape)
            mlps[f"node_processor_{l}"] = init_mlp(4 * n_l, n_l, rng=rng, **shape)
        mlps["decoder"] = init_mlp(n_l, OUTPUT_WIDTH, final_layer_norm=False, rng=rng, **shape)
        return ParameterSet(mlps)

    def _check_widths(self) -> None:
        n_l = self.config.latent_size
        expected = {
            "node_encoder": (len(self.node_channels), n_l),
            "edge_encoder": (len(self.edge_channels), n_l),
            "decoder": (n_l, OUTPUT_WIDTH),
        }
        for l in range(1, self.n_iterations + 1):
            expected[f"edge_processor_{l}"] = (3 * n_l, n_l)
            expected[f"node_processor_{l}"] = (4 * n_l, n_l)
        if set(expected) != set(self.params):
            raise ContractError(f"Parameter set has networks {sorted(self.params)}, expected {sorted(expected)}")
        for name, (n_in, n_out) in expected.items():
            mlp = self.params[name]
            if (mlp.input_dim, mlp.output_dim) != (n_in, n_out):
                raise ContractError(f"{name} maps {mlp.input_dim}->{mlp.output_dim}, expected {n_in}->{n_out}")

    @property
    def n_iterations(self) -> int:
        return self.config.processing_iterations

    @property
    def latent_size(self) -> int:
        return self.config.latent_size

    def require_stats(self) -> NormStats:
        if self.stats is None:
            raise NormalizationError("The model has no normalization statistics; fit them before running it")
        return self.stats

    def tensors(self, graph: CenterlineGraph) -> GraphTensors:
        return GraphTensors.from_graph(graph, boundary_edges=self.config.boundary_edges)

    # ------------------------------------------------------------------
    # Forward pieces on tensors
    # ------------------------------------------------------------------

    def node_inputs(self, tensors, p, q, loading, perturbation: Optional[FeaturePerturbation] = None) -> np.ndarray:
        stats = self.require_stats()
        features = tensors.static_nodes.copy()
        features[:, 0] = p
        features[:, 1] = q
        features[:, 16] = loading
        features = stats.node.forward(features)
        if perturbation is not None:
            features = perturbation.apply("node", features)
        return features[:, self.node_channels]

    def edge_inputs(self, tensors, perturbation: Optional[FeaturePerturbation] = None) -> np.ndarray:
        features = self.require_stats().edge.forward(tensors.edge_features)
        if perturbation is not None:
            features = perturbation.apply("edge", features)
        return features[:, self.edge_channels]

    def encode_tensors(self, tensors, p, q, loading, perturbation=None) -> Tuple[LatentGraph, Tuple]:
        node_features = self.node_inputs(tensors, p, q, loading, perturbation)
        v, node_cache = mlp_forward(self.params["node_encoder"], node_features)
        w, edge_cache = mlp_forward(self.params["edge_encoder"], self.edge_inputs(tensors, perturbation))
        return LatentGraph(v=v, w=w, l=0), (node_cache, edge_cache)

    def process_tensors(self, tensors: GraphTensors, latents: LatentGraph, l: int) -> Tuple[LatentGraph, Tuple]:
        if not 1 <= l <= self.n_iterations:
            raise ContractError(f"Processing iteration {l} outside 1..{self.n_iterations}")
        if latents.l != l - 1:
            raise ContractError(f"Iteration {l} needs latents from iteration {l - 1}, got {latents.l}")
        v, w = latents.v, latents.w
        senders, receivers = tensors.senders, tensors.receivers

        dw, edge_cache = mlp_forward(
            self.params[f"edge_processor_{l}"], np.concatenate([w, v[senders], v[receivers]], axis=1)
        )
        w_new = w + dw
        n = tensors.n_nodes
        aggregated = _scatter_sum(w_new, receivers, n)
        w_in = _scatter_sum(w_new[tensors.inlet_edges], receivers[tensors.inlet_edges], n)
        w_out = _scatter_sum(w_new[tensors.outlet_edges], receivers[tensors.outlet_edges], n)

        dv, node_cache = mlp_forward(
            self.params[f"node_processor_{l}"], np.concatenate([v, aggregated, w_in, w_out], axis=1)
        )
        return LatentGraph(v=v + dv, w=w_new, l=l), (edge_cache, node_cache)

    def decode_latents(self, latents: LatentGraph) -> Tuple[np.ndarray, MlpCache]:
        """Physical increments (dp, dq) per node."""
        y, cache = mlp_forward(self.params["decoder"], latents.v)
        return self.require_stats().output.inverse(y), cache

    def forward_step(
        self,
        tensors: GraphTensors,
        p: np.ndarray,
        q: np.ndarray,
        loading: np.ndarray,
        next_inlet: np.ndarray,
        perturbation: Optional[FeaturePerturbation] = None,
    ) -> Tuple[np.ndarray, np.ndarray, StepCache]:
        """One step on (possibly batched) tensors; next_inlet holds one value per graph."""
        try:
            latents, encoder_cache = self.encode_tensors(tensors, p, q, loading, perturbation)
            cache = StepCache(encoder=encoder_cache)
            for l in range(1, self.n_iterations + 1):
                latents, processor_cache = self.process_tensors(tensors, latents, l)
                cache.processors.append(processor_cache)
            delta, cache.decoder = self.decode_latents(latents)
        except NumericalError as e:
            raise RolloutDivergenceError(f"Network produced non-finite values: {e}") from e

        p_new = p + delta[:, 0]
        q_new = q + delta[:, 1]
        q_new[tensors.inlets] = next_inlet
        if not (np.all(np.isfinite(p_new)) and np.all(np.isfinite(q_new))):
            raise RolloutDivergenceError("Non-finite state after update")
        return p_new, q_new, cache

    def backward_step(
        self,
        tensors: GraphTensors,
        cache: StepCache,
        g_p_new: np.ndarray,
        g_q_new: np.ndarray,
        grads: ParameterSet,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Accumulate parameter gradients of one step into `grads`; return gradients w.r.t. (p, q)."""
        stats = self.require_stats()
        n_l = self.latent_size
        senders, receivers = tensors.senders, tensors.receivers
        inlet_edges = tensors.inlet_edges[:, None]
        outlet_edges = tensors.outlet_edges[:, None]

        g_p_new = np.array(g_p_new, dtype=float)
        g_q_new = np.array(g_q_new, dtype=float)
        # the inlet flow is overwritten, so nothing flows back through it
        g_q_new[tensors.inlets] = 0.0

        g_delta = np.stack([g_p_new, g_q_new], axis=1) * stats.output.std
        g_v, decoder_grads = mlp_backward(self.params["decoder"], cache.decoder, g_delta)
        grads.accumulate("decoder", decoder_grads)
        g_w = np.zeros((tensors.n_edges, n_l))

        for l in range(self.n_iterations, 0, -1):
            edge_cache, node_cache = cache.processors[l - 1]
            g_node_in, node_grads = mlp_backward(self.params[f"node_processor_{l}"], node_cache, g_v)
            grads.accumulate(f"node_processor_{l}", node_grads)
            g_v = g_v + g_node_in[:, :n_l]
            g_aggregated = g_node_in[:, n_l : 2 * n_l]
            g_in = g_node_in[:, 2 * n_l : 3 * n_l]
            g_out = g_node_in[:, 3 * n_l :]
            g_w_new = (
                g_w
                + g_aggregated[receivers]
                + inlet_edges * g_in[receivers]
                + outlet_edges * g_out[receivers]
            )

            g_edge_in, edge_grads = mlp_backward(self.params[f"edge_processor_{l}"], edge_cache, g_w_new)
            grads.accumulate(f"edge_processor_{l}", edge_grads)
            g_w = g_w_new + g_edge_in[:, :n_l]
            np.add.at(g_v, senders, g_edge_in[:, n_l : 2 * n_l])
            np.add.at(g_v, receivers, g_edge_in[:, 2 * n_l :])

        node_cache, edge_cache = cache.encoder
        g_x, encoder_grads = mlp_backward(self.params["node_encoder"], node_cache, g_v)
        grads.accumulate("node_encoder", encoder_grads)
        _, edge_encoder_grads = mlp_backward(self.params["edge_encoder"], edge_cache, g_w)
        grads.accumulate("edge_encoder", edge_encoder_grads)

        # channels 0 and 1 are always kept and come first in the sorted channel list
        g_p = g_p_new + g_x[:, 0] / stats.node.std[0]
        g_q = g_q_new + g_x[:, 1] / stats.node.std[1]
        return g_p, g_q

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "params": self.params.to_dict(),
            "stats": None if self.stats is None else self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GnnModel":
        return cls(
            config=ModelConfig.model_validate(data["config"]),
            stats=None if data.get("stats") is None else NormStats.from_dict(data["stats"]),
            params=ParameterSet.from_dict(data["params"]),
        )


def encode(model: GnnModel, graph: CenterlineGraph, state: NodeState) -> LatentGraph:
    tensors = model.tensors(graph)
    loading = np.full(graph.n_nodes, 1.0 if state.loading else 0.0)
    latents, _ = model.encode_tensors(tensors, state.pressure, state.flow, loading)
    return latents


def process_step(model: GnnModel, graph: CenterlineGraph, latents: LatentGraph, l: int) -> LatentGraph:
    latents, _ = model.process_tensors(model.tensors(graph), latents, l)
    return latents


def decode(model: GnnModel, latents: LatentGraph) -> np.ndarray:
    """(N, 2) physical increments (dp, dq)."""
    if latents.l != model.n_iterations:
        raise ContractError(f"Decoding needs latents after iteration {model.n_iterations}, got {latents.l}")
    delta, _ = model.decode_latents(latents)
    return delta


def gnn_step(
    model: GnnModel,
    graph: CenterlineGraph,
    state: NodeState,
    next_inlet_flow: float,
    next_loading: bool = False,
) -> NodeState:
    """Advance one step; the inlet flow of the new state is next_inlet_flow exactly."""
    tensors = model.tensors(graph)
    loading = np.full(graph.n_nodes, 1.0 if state.loading else 0.0)
    p, q, _ = model.forward_step(tensors, state.pressure, state.flow, loading, np.array([next_inlet_flow]))
    return NodeState(pressure=p, flow=q, loading=next_loading, time_index=state.time_index + 1)


def rollout(
    model: GnnModel,
    graph: CenterlineGraph,
    initial_state: NodeState,
    inlet_series: Sequence[float],
    m: int,
    loading_schedule: Optional[Sequence[bool]] = None,
    perturbation: Optional[FeaturePerturbation] = None,
) -> Trajectory:
    """Apply the network m times from initial_state.

    Args:
        inlet_series: Prescribed inlet flow of states 1..m (entry j belongs to state j + 1)
        m: Number of steps
        loading_schedule: Loading flag of states 1..m, all False when omitted
        perturbation: Optional feature noise applied on every step

    Returns:
        Trajectory of m + 1 states on the graph's time step
    """
    inlet_series = np.asarray(inlet_series, dtype=float)
    if m < 0 or inlet_series.shape[0] < m:
        raise ContractError(f"Rollout of {m} steps needs at least {m} inlet values, got {inlet_series.shape[0]}")
    schedule = np.zeros(m, dtype=bool) if loading_schedule is None else np.asarray(loading_schedule[:m], dtype=bool)
    if schedule.shape[0] < m:
        raise ContractError(f"Loading schedule has {schedule.shape[0]} entries, need {m}")

    tensors = model.tensors(graph)
    states = np.zeros((m + 1, graph.n_nodes, 2))
    p, q = initial_state.pressure.copy(), initial_state.flow.copy()
    states[0, :, 0], states[0, :, 1] = p, q
    flags = np.concatenate([[initial_state.loading], schedule])
    for k in range(m):
        loading = np.full(graph.n_nodes, 1.0 if flags[k] else 0.0)
        try:
            p, q, _ = model.forward_step(tensors, p, q, loading, inlet_series[k : k + 1], perturbation)
        except RolloutDivergenceError as e:
            raise RolloutDivergenceError(f"Rollout diverged at step {k + 1}: {e}", step=k + 1) from e
        states[k + 1, :, 0], states[k + 1, :, 1] = p, q

    leading = int(np.argmin(flags)) if not flags.all() else flags.shape[0]
    dt = graph.dt
    if dt is None:
        logger.warning(f"Graph {graph.id} stores no time step; the rollout trajectory uses dt = 1 s")
        dt = 1.0
    return Trajectory(
        states=states,
        dt=dt,
        inlet_flow=np.concatenate([[initial_state.flow[graph.inlet]], inlet_series[:m]]),
        loading_steps=leading,
        graph_ref=graph.id,
    )
