"""Nodal states and trajectories of pressure and flow rate."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from hemo_gnn.errors import ContractError, DatasetError


@dataclass(frozen=True)
class NodeState:
    """Pressure (barye) and flow (cm^3/s) at every node at one time index."""

    pressure: np.ndarray
    flow: np.ndarray
    loading: bool = False
    time_index: int = 0

    def __post_init__(self):
        pressure = np.asarray(self.pressure, dtype=float)
        flow = np.asarray(self.flow, dtype=float)
        if pressure.ndim != 1 or pressure.shape != flow.shape:
            raise ContractError("pressure and flow must be 1D arrays of equal length")
        object.__setattr__(self, "pressure", pressure)
        object.__setattr__(self, "flow", flow)
        object.__setattr__(self, "loading", bool(self.loading))

    @property
    def n_nodes(self) -> int:
        return self.pressure.shape[0]

    def replace(self, **changes) -> "NodeState":
        values = {
            "pressure": self.pressure,
            "flow": self.flow,
            "loading": self.loading,
            "time_index": self.time_index,
        }
        values.update(changes)
        return NodeState(**values)


@dataclass
class Trajectory:
    """A sequence of nodal states at constant time step.

    Attributes:
        states: Array of shape (K, N, 2) holding [p, q] per step and node
        dt: Time step in seconds
        inlet_flow: Prescribed inlet flow for each of the K steps
        loading_steps: Number of leading states that belong to the loading ramp
        graph_ref: Identifier of the graph the states live on
        id: Trajectory identifier
        source_id: Identifier of the simulation this trajectory derives from
        meta: Free-form diagnostics (solver statistics, perturbation factors)
    """

    states: np.ndarray
    dt: float
    inlet_flow: np.ndarray
    loading_steps: int = 0
    graph_ref: str = ""
    id: str = ""
    source_id: str = ""
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.inlet_flow = np.asarray(self.inlet_flow, dtype=float)
        if self.states.ndim != 3 or self.states.shape[2] != 2:
            raise DatasetError(f"Trajectory states must have shape (steps, nodes, 2), got {self.states.shape}")
        if self.dt <= 0:
            raise DatasetError(f"Trajectory dt must be positive, got {self.dt}")
        if self.inlet_flow.shape != (self.states.shape[0],):
            raise DatasetError("inlet_flow must hold one value per state")
        if not 0 <= self.loading_steps <= self.states.shape[0]:
            raise DatasetError("loading_steps out of range")
        if not self.source_id:
            self.source_id = self.id

    @classmethod
    def from_states(
        cls,
        states: Sequence[NodeState],
        dt: float,
        inlet_flow: Optional[Sequence[float]] = None,
        inlet: Optional[int] = None,
        **kwargs,
    ) -> "Trajectory":
        """Stack NodeStates into a trajectory, checking shared node count and consecutive indices."""
        if not states:
            raise DatasetError("A trajectory needs at least one state")
        n_nodes = states[0].n_nodes
        for previous, current in zip(states, states[1:]):
            if current.n_nodes != n_nodes:
                raise DatasetError("All states of a trajectory must share one node count")
            if current.time_index != previous.time_index + 1:
                raise DatasetError("Trajectory time indices must be consecutive")
        array = np.stack([np.stack([s.pressure, s.flow], axis=1) for s in states])
        if inlet_flow is None:
            if inlet is None:
                raise ContractError("Provide inlet_flow or the inlet node index")
            inlet_flow = array[:, inlet, 1]
        loading_steps = kwargs.pop("loading_steps", sum(1 for s in states if s.loading))
        return cls(states=array, dt=dt, inlet_flow=np.asarray(inlet_flow), loading_steps=loading_steps, **kwargs)

    @property
    def n_steps(self) -> int:
        """Number of stored states (K)."""
        return self.states.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.states.shape[1]

    @property
    def pressure(self) -> np.ndarray:
        return self.states[:, :, 0]

    @property
    def flow(self) -> np.ndarray:
        return self.states[:, :, 1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    @property
    def loading_flags(self) -> np.ndarray:
        flags = np.zeros(self.n_steps, dtype=bool)
        flags[: self.loading_steps] = True
        return flags

    def state(self, k: int) -> NodeState:
        if not 0 <= k < self.n_steps:
            raise ContractError(f"State index {k} out of range for {self.n_steps} states")
        return NodeState(
            pressure=self.states[k, :, 0].copy(),
            flow=self.states[k, :, 1].copy(),
            loading=k < self.loading_steps,
            time_index=k,
        )

    def to_states(self) -> List[NodeState]:
        return [self.state(k) for k in range(self.n_steps)]

    def slice(self, start: int, stop: Optional[int] = None) -> "Trajectory":
        """Sub-trajectory of states [start, stop); loading steps are re-counted."""
        stop = self.n_steps if stop is None else stop
        loading = max(0, min(self.loading_steps, stop) - start)
        return Trajectory(
            states=self.states[start:stop].copy(),
            dt=self.dt,
            inlet_flow=self.inlet_flow[start:stop].copy(),
            loading_steps=loading,
            graph_ref=self.graph_ref,
            id=self.id,
            source_id=self.source_id,
            meta=dict(self.meta),
        )
