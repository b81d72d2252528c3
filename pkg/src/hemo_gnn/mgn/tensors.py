"""Static array view of one graph or a disjoint union of graphs."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from hemo_gnn.errors import ContractError
from hemo_gnn.graph.centerline import (
    INLET,
    INLET_EDGE,
    OUTLET,
    OUTLET_EDGE,
    CenterlineGraph,
    add_boundary_edges,
    without_boundary_edges,
)
from hemo_gnn.graph.features import edge_feature_matrix, static_node_features


def prepare_graph(graph: CenterlineGraph, boundary_edges: bool = True) -> CenterlineGraph:
    """Add or strip boundary edges so the graph matches a model configuration."""
    if not boundary_edges and graph.has_boundary_edges:
        return without_boundary_edges(graph)
    if boundary_edges and not graph.has_boundary_edges:
        return add_boundary_edges(graph)
    return graph


@dataclass
class GraphTensors:
    """Arrays the network consumes; batching concatenates graphs into one.

    Attributes:
        static_nodes: (N, 17) node features with zeroed p, q and l channels
        edge_features: (E, 8) raw edge features
        senders, receivers: (E,) endpoints of every directed edge
        edge_type: (E,) edge type codes
        node_type: (N,) node type codes
        node_graph: (N,) index of the graph each node belongs to
        inlets: (G,) inlet node per graph
        n_nodes_per_graph: (G,) node counts
    """

    static_nodes: np.ndarray
    edge_features: np.ndarray
    senders: np.ndarray
    receivers: np.ndarray
    edge_type: np.ndarray
    node_type: np.ndarray
    node_graph: np.ndarray
    inlets: np.ndarray
    n_nodes_per_graph: np.ndarray

    @classmethod
    def from_graph(cls, graph: CenterlineGraph, boundary_edges: bool = True) -> "GraphTensors":
        """Tensors of one graph, with boundary edges added or stripped as requested."""
        graph = prepare_graph(graph, boundary_edges)
        edges = graph.edges
        return cls(
            static_nodes=static_node_features(graph),
            edge_features=edge_feature_matrix(graph),
            senders=edges[:, 0].copy(),
            receivers=edges[:, 1].copy(),
            edge_type=graph.edge_type.copy(),
            node_type=graph.node_type.copy(),
            node_graph=np.zeros(graph.n_nodes, dtype=int),
            inlets=np.array([graph.inlet]),
            n_nodes_per_graph=np.array([graph.n_nodes]),
        )

    @property
    def n_nodes(self) -> int:
        return self.node_type.shape[0]

    @property
    def n_edges(self) -> int:
        return self.senders.shape[0]

    @property
    def n_graphs(self) -> int:
        return self.inlets.shape[0]

    @property
    def inlet_edges(self) -> np.ndarray:
        return self.edge_type == INLET_EDGE

    @property
    def outlet_edges(self) -> np.ndarray:
        return self.edge_type == OUTLET_EDGE

    @property
    def boundary_node_mask(self) -> np.ndarray:
        return (self.node_type == INLET) | (self.node_type == OUTLET)

    def per_node(self, values: Sequence) -> np.ndarray:
        """Broadcast one value per graph to every node of that graph."""
        values = np.asarray(values)
        if values.shape[0] != self.n_graphs:
            raise ContractError(f"Expected {self.n_graphs} per-graph values, got {values.shape[0]}")
        return values[self.node_graph]


def concatenate(parts: List[GraphTensors]) -> GraphTensors:
    """Disjoint union of graph tensors with node indices offset per part."""
    if not parts:
        raise ContractError("Cannot concatenate an empty list of graphs")
    node_offsets = np.cumsum([0] + [p.n_nodes for p in parts[:-1]])
    graph_offsets = np.cumsum([0] + [p.n_graphs for p in parts[:-1]])
    return GraphTensors(
        static_nodes=np.concatenate([p.static_nodes for p in parts]),
        edge_features=np.concatenate([p.edge_features for p in parts]),
        senders=np.concatenate([p.senders + o for p, o in zip(parts, node_offsets)]),
        receivers=np.concatenate([p.receivers + o for p, o in zip(parts, node_offsets)]),
        edge_type=np.concatenate([p.edge_type for p in parts]),
        node_type=np.concatenate([p.node_type for p in parts]),
        node_graph=np.concatenate([p.node_graph + g for p, g in zip(parts, graph_offsets)]),
        inlets=np.concatenate([p.inlets + o for p, o in zip(parts, node_offsets)]),
        n_nodes_per_graph=np.concatenate([p.n_nodes_per_graph for p in parts]),
    )
