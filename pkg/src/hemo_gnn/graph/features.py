"""Node and edge feature vectors of centerline graphs."""

from typing import Tuple, Union

import numpy as np

from hemo_gnn.errors import ContractError, DegenerateEdgeError
from hemo_gnn.graph.centerline import CenterlineGraph
from hemo_gnn.graph.state import NodeState
from hemo_gnn.utils.constants import EDGE_FEATURE_WIDTH, NODE_FEATURE_WIDTH


def static_node_features(graph: CenterlineGraph) -> np.ndarray:
    """(N, 17) node features with the state channels p, q and l left at zero."""
    n = graph.n_nodes
    features = np.zeros((n, NODE_FEATURE_WIDTH))
    features[:, 2] = graph.area
    features[np.arange(n), 3 + graph.node_type] = 1.0
    features[:, 7:10] = graph.tangent
    features[:, 10] = graph.T_cc
    features[:, 11] = graph.p_min
    features[:, 12] = graph.p_max
    Rp, C, Rd = graph.node_bc_arrays()
    features[:, 13] = Rp
    features[:, 14] = C
    features[:, 15] = Rd
    return features


def node_feature_matrix(graph: CenterlineGraph, state: NodeState) -> np.ndarray:
    """(N, 17) node features: [p, q, A, alpha(4), phi(3), T_cc, p_min, p_max, R_p, C, R_d, l]."""
    if state.n_nodes != graph.n_nodes:
        raise ContractError(f"State has {state.n_nodes} nodes, graph has {graph.n_nodes}")
    features = static_node_features(graph)
    features[:, 0] = state.pressure
    features[:, 1] = state.flow
    features[:, 16] = 1.0 if state.loading else 0.0
    return features


def node_features(graph: CenterlineGraph, state: NodeState, i: int) -> np.ndarray:
    if not 0 <= i < graph.n_nodes:
        raise ContractError(f"Node {i} out of range for {graph.n_nodes} nodes")
    return node_feature_matrix(graph, state)[i]


def edge_feature_matrix(graph: CenterlineGraph) -> np.ndarray:
    """(E, 8) features of every directed edge: [d/|d| (3), z, beta(4)]."""
    edges = graph.edges
    displacement = graph.node_positions[edges[:, 1]] - graph.node_positions[edges[:, 0]]
    norms = np.linalg.norm(displacement, axis=1)
    if np.any(norms == 0):
        k = int(np.flatnonzero(norms == 0)[0])
        raise DegenerateEdgeError(f"Edge ({edges[k, 0]}, {edges[k, 1]}) joins coincident positions")

    features = np.zeros((edges.shape[0], EDGE_FEATURE_WIDTH))
    features[:, 0:3] = displacement / norms[:, None]
    features[:, 3] = graph.edge_lengths
    features[np.arange(edges.shape[0]), 4 + graph.edge_type] = 1.0
    return features


def edge_features(graph: CenterlineGraph, edge: Union[int, Tuple[int, int]]) -> np.ndarray:
    """Features of one edge, given by its index in `graph.edges` or as a (sender, receiver) pair.

    A pair that is both a physical and a boundary edge resolves to the physical one.
    """
    index = graph.edge_index(edge) if isinstance(edge, tuple) else int(edge)
    if not 0 <= index < graph.n_edges:
        raise ContractError(f"Edge index {index} out of range for {graph.n_edges} edges")
    return edge_feature_matrix(graph)[index]
