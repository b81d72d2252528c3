"""Centerline graphs, nodal states, features and normalization."""

from hemo_gnn.graph.state import NodeState, Trajectory
from hemo_gnn.graph.centerline import (
    CenterlineGraph,
    add_boundary_edges,
    build_graph,
    path_length,
    without_boundary_edges,
)
from hemo_gnn.graph.features import edge_feature_matrix, edge_features, node_feature_matrix, node_features
from hemo_gnn.graph.normalization import NormStats, apply_normalization, fit_normalization

__all__ = [
    "NodeState",
    "Trajectory",
    "CenterlineGraph",
    "add_boundary_edges",
    "build_graph",
    "path_length",
    "without_boundary_edges",
    "edge_feature_matrix",
    "edge_features",
    "node_feature_matrix",
    "node_features",
    "NormStats",
    "apply_normalization",
    "fit_normalization",
]
