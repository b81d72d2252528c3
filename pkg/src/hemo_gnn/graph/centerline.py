"""Centerline graphs: typed nodes, bidirectional physical edges and boundary edges."""

import dataclasses
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from hemo_gnn.errors import ContractError, DegenerateEdgeError, GraphValidationError, TopologyError
from hemo_gnn.hemo1d.boundary import RcrParams
from hemo_gnn.utils.constants import EDGE_TYPES, NODE_TYPES

logger = logging.getLogger(__name__)

BRANCH, JUNCTION, INLET, OUTLET = range(4)
BRANCH_EDGE, JUNCTION_EDGE, INLET_EDGE, OUTLET_EDGE = range(4)

_TIE_TOLERANCE = 1e-12


def _frozen(array, dtype=float) -> np.ndarray:
    result = np.array(array, dtype=dtype, copy=True)
    result.setflags(write=False)
    return result


def _type_code(value: Union[str, int]) -> int:
    if isinstance(value, str):
        if value not in NODE_TYPES:
            raise GraphValidationError(f"Unknown node type '{value}'. Available: {', '.join(NODE_TYPES)}")
        return NODE_TYPES.index(value)
    code = int(value)
    if not 0 <= code < len(NODE_TYPES):
        raise GraphValidationError(f"Node type code {code} out of range")
    return code


@dataclass(frozen=True, eq=False)
class CenterlineGraph:
    """Directed centerline graph with static per-node data.

    Edges are stored as directed (sender, receiver) pairs. Each physical
    segment contributes both directions; boundary edges join every interior
    node to its closest inlet or outlet, again in both directions.
    """

    node_positions: np.ndarray
    node_type: np.ndarray
    physical_edges: np.ndarray
    area: np.ndarray
    tangent: np.ndarray
    T_cc: float
    p_min: float
    p_max: float
    outlet_bcs: Dict[int, RcrParams]
    boundary_edges: np.ndarray = field(default_factory=lambda: _frozen(np.zeros((0, 2)), int))
    boundary_edge_type: np.ndarray = field(default_factory=lambda: _frozen(np.zeros(0), int))
    dt: Optional[float] = None
    id: str = ""
    inflow: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "node_positions", _frozen(self.node_positions))
        object.__setattr__(self, "node_type", _frozen(self.node_type, int))
        object.__setattr__(self, "physical_edges", _frozen(np.reshape(self.physical_edges, (-1, 2)), int))
        object.__setattr__(self, "boundary_edges", _frozen(np.reshape(self.boundary_edges, (-1, 2)), int))
        object.__setattr__(self, "boundary_edge_type", _frozen(self.boundary_edge_type, int))
        object.__setattr__(self, "area", _frozen(self.area))
        object.__setattr__(self, "tangent", _frozen(self.tangent))
        object.__setattr__(self, "outlet_bcs", {int(k): v for k, v in self.outlet_bcs.items()})
        if self.inflow is not None:
            object.__setattr__(self, "inflow", _frozen(self.inflow))
        self.validate()

    def validate(self) -> None:
        n = self.n_nodes
        if self.node_positions.shape != (n, 3) or self.tangent.shape != (n, 3) or self.area.shape != (n,):
            raise GraphValidationError("Node arrays must share one node count")
        inlets = np.flatnonzero(self.node_type == INLET)
        if inlets.size != 1:
            raise TopologyError(f"A centerline graph needs exactly one inlet node, found {inlets.size}")
        if not np.any(self.node_type == OUTLET):
            raise TopologyError("A centerline graph needs at least one outlet node")
        if np.any(self.area <= 0):
            raise GraphValidationError("Node areas must be positive")
        if np.any(np.abs(np.linalg.norm(self.tangent, axis=1) - 1.0) > 1e-12):
            raise GraphValidationError("Node tangents must have unit norm")
        outlets = set(self.outlets.tolist())
        if set(self.outlet_bcs) != outlets:
            raise GraphValidationError(
                f"Outlet BCs given for nodes {sorted(self.outlet_bcs)} but outlets are {sorted(outlets)}"
            )
        if self.boundary_edges.shape[0] != self.boundary_edge_type.shape[0]:
            raise GraphValidationError("Every boundary edge needs a type")
        for edges in (self.physical_edges, self.boundary_edges):
            if edges.size and (edges.min() < 0 or edges.max() >= n):
                raise GraphValidationError("Edge references an unknown node")

    @property
    def n_nodes(self) -> int:
        return self.node_type.shape[0]

    @property
    def inlet(self) -> int:
        return int(np.flatnonzero(self.node_type == INLET)[0])

    @property
    def outlets(self) -> np.ndarray:
        return np.flatnonzero(self.node_type == OUTLET)

    @property
    def boundary_nodes(self) -> np.ndarray:
        """Inlet and outlet nodes in index order."""
        return np.flatnonzero((self.node_type == INLET) | (self.node_type == OUTLET))

    @property
    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero((self.node_type == BRANCH) | (self.node_type == JUNCTION))

    @property
    def has_boundary_edges(self) -> bool:
        return self.boundary_edges.shape[0] > 0

    @property
    def physical_edge_type(self) -> np.ndarray:
        """junction_junction when both endpoints are junction nodes, branch_branch otherwise."""
        both = (self.node_type[self.physical_edges[:, 0]] == JUNCTION) & (
            self.node_type[self.physical_edges[:, 1]] == JUNCTION
        )
        return np.where(both, JUNCTION_EDGE, BRANCH_EDGE)

    @property
    def edges(self) -> np.ndarray:
        """All directed edges: physical first, then boundary."""
        return np.concatenate([self.physical_edges, self.boundary_edges], axis=0)

    @property
    def edge_type(self) -> np.ndarray:
        return np.concatenate([self.physical_edge_type, self.boundary_edge_type])

    @property
    def n_edges(self) -> int:
        return self.physical_edges.shape[0] + self.boundary_edges.shape[0]

    @cached_property
    def physical_graph(self) -> nx.Graph:
        """Undirected networkx view of the physical edges weighted by Euclidean length."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_nodes))
        for i, j in self.physical_edges:
            length = float(np.linalg.norm(self.node_positions[j] - self.node_positions[i]))
            graph.add_edge(int(i), int(j), length=length)
        return graph

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Path length z over physical edges for every directed edge in `edges`."""
        lengths = np.empty(self.n_edges)
        n_physical = self.physical_edges.shape[0]
        for k, (i, j) in enumerate(self.edges):
            if k < n_physical:
                lengths[k] = self.physical_graph[int(i)][int(j)]["length"]
            else:
                lengths[k] = path_length(self, int(i), int(j))
        return lengths

    def node_bc_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-node (R_p, C, R_d), zero away from outlets."""
        Rp, C, Rd = np.zeros(self.n_nodes), np.zeros(self.n_nodes), np.zeros(self.n_nodes)
        for node, bc in self.outlet_bcs.items():
            Rp[node], C[node], Rd[node] = bc.Rp, bc.C, bc.Rd
        return Rp, C, Rd

    def edge_index(self, edge: Tuple[int, int]) -> int:
        """Index of the first directed edge (i, j) in `edges`."""
        i, j = edge
        matches = np.flatnonzero((self.edges[:, 0] == i) & (self.edges[:, 1] == j))
        if matches.size == 0:
            raise ContractError(f"Edge ({i}, {j}) is not part of the graph")
        return int(matches[0])

    def replace(self, **changes) -> "CenterlineGraph":
        return dataclasses.replace(self, **changes)


def _parents(tree: nx.Graph, root: int) -> Dict[int, Optional[int]]:
    parents: Dict[int, Optional[int]] = {root: None}
    for parent, child in nx.bfs_edges(tree, root):
        parents[child] = parent
    return parents


def _tangents(positions: np.ndarray, tree: nx.Graph, root: int) -> np.ndarray:
    """Central differences along the flow direction, one-sided at segment ends and branch points."""
    parents = _parents(tree, root)
    children: Dict[int, List[int]] = {node: [] for node in tree.nodes}
    for node, parent in parents.items():
        if parent is not None:
            children[parent].append(node)

    tangents = np.zeros_like(positions)
    for node in range(positions.shape[0]):
        parent = parents[node]
        kids = children[node]
        if parent is not None and len(kids) == 1:
            direction = positions[kids[0]] - positions[parent]
        elif parent is not None:
            direction = positions[node] - positions[parent]
        else:
            direction = positions[kids[0]] - positions[node]
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise DegenerateEdgeError(f"Cannot compute a tangent at node {node}: coincident neighbour positions")
        tangents[node] = direction / norm
    return tangents


def build_graph(
    positions,
    segments: Sequence[Tuple[int, int]],
    node_types: Sequence[Union[str, int]],
    areas,
    scalars: Mapping[str, float],
    bcs: Mapping[int, RcrParams],
    id: str = "",
    dt: Optional[float] = None,
    inflow=None,
) -> CenterlineGraph:
    """Build a centerline graph from node data and undirected segments.

    Args:
        positions: (N, 3) node coordinates in cm
        segments: Undirected node pairs forming a tree
        node_types: Node type names or codes (branch, junction, inlet, outlet)
        areas: Lumen area per node in cm^2
        scalars: T_cc, p_min and p_max
        bcs: Outlet node -> RcrParams
        id: Graph identifier
        dt: Time step of trajectories living on this graph
        inflow: Optional prescribed inlet flow for one cycle at dt

    Returns:
        CenterlineGraph without boundary edges
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise GraphValidationError(f"positions must have shape (N, 3), got {positions.shape}")
    codes = np.array([_type_code(t) for t in node_types], dtype=int)
    if codes.shape[0] != n:
        raise GraphValidationError("node_types must give one type per node")
    areas = np.asarray(areas, dtype=float)
    if areas.shape != (n,):
        raise GraphValidationError("areas must give one value per node")
    if np.any(areas <= 0):
        raise GraphValidationError("Node areas must be positive")

    inlets = np.flatnonzero(codes == INLET)
    if inlets.size != 1:
        raise TopologyError(f"A centerline graph needs exactly one inlet node, found {inlets.size}")
    if n < 2:
        raise TopologyError("A centerline graph needs at least two nodes")

    tree = nx.Graph()
    tree.add_nodes_from(range(n))
    for i, j in segments:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise TopologyError(f"Invalid segment ({i}, {j})")
        tree.add_edge(int(i), int(j))
    if not nx.is_connected(tree):
        raise TopologyError("Segments do not connect every node")
    if not nx.is_tree(tree):
        raise TopologyError("Segments must form a tree")

    root = int(inlets[0])
    tangents = _tangents(positions, tree, root)

    directed = []
    for parent, child in nx.bfs_edges(tree, root):
        directed.append((parent, child))
        directed.append((child, parent))

    return CenterlineGraph(
        node_positions=positions,
        node_type=codes,
        physical_edges=np.array(directed, dtype=int).reshape(-1, 2),
        area=areas,
        tangent=tangents,
        T_cc=float(scalars["T_cc"]),
        p_min=float(scalars["p_min"]),
        p_max=float(scalars["p_max"]),
        outlet_bcs=dict(bcs),
        dt=dt,
        id=id,
        inflow=None if inflow is None else np.asarray(inflow, dtype=float),
    )


def path_length(graph: CenterlineGraph, i: int, j: int) -> float:
    """Shortest-path length between i and j over physical edges only."""
    for node in (i, j):
        if not 0 <= node < graph.n_nodes:
            raise ContractError(f"Node {node} out of range for {graph.n_nodes} nodes")
    try:
        return float(nx.shortest_path_length(graph.physical_graph, i, j, weight="length"))
    except nx.NetworkXNoPath as e:
        raise TopologyError(f"Nodes {i} and {j} are not connected by physical edges") from e


def add_boundary_edges(graph: CenterlineGraph) -> CenterlineGraph:
    """Join every interior node to its closest boundary node in both directions.

    Distances are path lengths over physical edges. Ties go to the boundary
    node with the lowest index. Any existing boundary edges are replaced.
    """
    interior = graph.interior_nodes
    if interior.size == 0:
        return without_boundary_edges(graph)

    boundary = graph.boundary_nodes
    distances = np.empty((boundary.size, graph.n_nodes))
    for row, b in enumerate(boundary):
        lengths = nx.single_source_dijkstra_path_length(graph.physical_graph, int(b), weight="length")
        distances[row] = [lengths[node] for node in range(graph.n_nodes)]

    edges = []
    types = []
    for node in interior:
        column = distances[:, node]
        best = column.min()
        # boundary is sorted, so the first candidate within tolerance has the lowest index
        candidates = np.flatnonzero(column <= best + _TIE_TOLERANCE * max(best, 1.0))
        b = int(boundary[candidates[0]])
        kind = INLET_EDGE if graph.node_type[b] == INLET else OUTLET_EDGE
        edges.extend([(b, int(node)), (int(node), b)])
        types.extend([kind, kind])

    logger.debug(f"Added {len(edges) // 2} boundary edge pairs to graph {graph.id or '<unnamed>'}")
    return graph.replace(
        boundary_edges=np.array(edges, dtype=int).reshape(-1, 2),
        boundary_edge_type=np.array(types, dtype=int),
    )


def without_boundary_edges(graph: CenterlineGraph) -> CenterlineGraph:
    return graph.replace(boundary_edges=np.zeros((0, 2), dtype=int), boundary_edge_type=np.zeros(0, dtype=int))


def edge_type_name(code: int) -> str:
    return EDGE_TYPES[code]


def node_type_name(code: int) -> str:
    return NODE_TYPES[code]
