"""JSON files for graphs, trajectories and 1D geometries."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from hemo_gnn.errors import DatasetError, HemoError
from hemo_gnn.graph.centerline import INLET_EDGE, OUTLET_EDGE, CenterlineGraph
from hemo_gnn.graph.normalization import NormStats
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.hemo1d.boundary import BcMode, RcrParams
from hemo_gnn.hemo1d.geometry import Geometry1D, Junction1D, Segment1D
from hemo_gnn.hemo1d.wall import WallModel
from hemo_gnn.utils.constants import EDGE_TYPES, NODE_TYPES, SCHEMA_VERSION

logger = logging.getLogger(__name__)

FileModel = TypeVar("FileModel", bound=BaseModel)


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NodeRecord(_Record):
    position: List[float] = Field(min_length=3, max_length=3)
    type: str
    area: float
    tangent: List[float] = Field(min_length=3, max_length=3)


class EdgeRecord(_Record):
    i: int
    j: int
    type: str


class BcRecord(_Record):
    node: int
    Rp: float
    C: float = 0.0
    Rd: float = 0.0
    mode: BcMode = BcMode.RCR


class GraphFile(_Record):
    schema_version: int = SCHEMA_VERSION
    id: str = ""
    nodes: List[NodeRecord]
    edges: List[EdgeRecord]
    T_cc: float
    p_min: float
    p_max: float
    dt: Optional[float] = None
    outlet_bcs: List[BcRecord]
    inflow: Optional[List[float]] = None


class TrajectoryFile(_Record):
    schema_version: int = SCHEMA_VERSION
    id: str = ""
    source_id: str = ""
    graph_id: str = ""
    dt: float
    states: List[List[List[float]]]
    inlet_flow: List[float]
    loading_steps: int = 0
    meta: Dict[str, Any] = Field(default_factory=dict)


class SegmentRecord(_Record):
    z: List[float]
    A0: List[float]
    r0: List[float]
    p0: List[float]
    points: Optional[List[List[float]]] = None


class JunctionRecord(_Record):
    upstream: int
    downstream: List[int]


class SegmentBcRecord(_Record):
    segment: int
    Rp: float
    C: float = 0.0
    Rd: float = 0.0
    mode: BcMode = BcMode.RCR


class WallRecord(_Record):
    k1: float
    k2: float
    k3: float


class GeometryFile(_Record):
    schema_version: int = SCHEMA_VERSION
    id: str = ""
    segments: List[SegmentRecord]
    junctions: List[JunctionRecord] = Field(default_factory=list)
    inlet_segment: int = 0
    wall: WallRecord
    bcs: List[SegmentBcRecord]


def _write(path: Path, model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(), encoding="utf-8")
    return path


def _read(path: Path, model_type: Type[FileModel]) -> FileModel:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"File not found: {path}")
    try:
        model = model_type.model_validate_json(path.read_text(encoding="utf-8"))
    except (ValidationError, json.JSONDecodeError) as e:
        raise DatasetError(f"Invalid {model_type.__name__} in {path}: {e}") from e
    if model.schema_version != SCHEMA_VERSION:
        raise DatasetError(f"{path} has schema version {model.schema_version}, expected {SCHEMA_VERSION}")
    return model


def _bc(record) -> RcrParams:
    if record.mode is BcMode.RESISTANCE:
        return RcrParams.resistance(record.Rp)
    return RcrParams(Rp=record.Rp, C=record.C, Rd=record.Rd)


def graph_to_file(graph: CenterlineGraph) -> GraphFile:
    nodes = [
        NodeRecord(
            position=graph.node_positions[n].tolist(),
            type=NODE_TYPES[graph.node_type[n]],
            area=float(graph.area[n]),
            tangent=graph.tangent[n].tolist(),
        )
        for n in range(graph.n_nodes)
    ]
    edges = [
        EdgeRecord(i=int(i), j=int(j), type=EDGE_TYPES[t]) for (i, j), t in zip(graph.edges, graph.edge_type)
    ]
    bcs = [BcRecord(node=node, **bc.to_dict()) for node, bc in sorted(graph.outlet_bcs.items())]
    return GraphFile(
        id=graph.id,
        nodes=nodes,
        edges=edges,
        T_cc=graph.T_cc,
        p_min=graph.p_min,
        p_max=graph.p_max,
        dt=graph.dt,
        outlet_bcs=bcs,
        inflow=None if graph.inflow is None else graph.inflow.tolist(),
    )


def graph_from_file(data: GraphFile) -> CenterlineGraph:
    try:
        node_type = [NODE_TYPES.index(node.type) for node in data.nodes]
        edge_type = [EDGE_TYPES.index(edge.type) for edge in data.edges]
    except ValueError as e:
        raise DatasetError(f"Unknown node or edge type in graph {data.id}: {e}") from e
    boundary_codes = (INLET_EDGE, OUTLET_EDGE)
    physical = [(e.i, e.j) for e, t in zip(data.edges, edge_type) if t not in boundary_codes]
    boundary = [(e.i, e.j) for e, t in zip(data.edges, edge_type) if t in boundary_codes]
    boundary_type = [t for t in edge_type if t in boundary_codes]
    try:
        return CenterlineGraph(
            node_positions=np.array([node.position for node in data.nodes]),
            node_type=np.array(node_type),
            physical_edges=np.array(physical, dtype=int).reshape(-1, 2),
            area=np.array([node.area for node in data.nodes]),
            tangent=np.array([node.tangent for node in data.nodes]),
            T_cc=data.T_cc,
            p_min=data.p_min,
            p_max=data.p_max,
            outlet_bcs={record.node: _bc(record) for record in data.outlet_bcs},
            boundary_edges=np.array(boundary, dtype=int).reshape(-1, 2),
            boundary_edge_type=np.array(boundary_type, dtype=int),
            dt=data.dt,
            id=data.id,
            inflow=None if data.inflow is None else np.array(data.inflow),
        )
    except HemoError as e:
        raise DatasetError(f"Graph {data.id} is invalid: {e}") from e


def save_graph(graph: CenterlineGraph, path: Path) -> Path:
    return _write(path, graph_to_file(graph))


def load_graph(path: Path) -> CenterlineGraph:
    return graph_from_file(_read(path, GraphFile))


def save_trajectory(trajectory: Trajectory, path: Path) -> Path:
    data = TrajectoryFile(
        id=trajectory.id,
        source_id=trajectory.source_id,
        graph_id=trajectory.graph_ref,
        dt=trajectory.dt,
        states=trajectory.states.tolist(),
        inlet_flow=trajectory.inlet_flow.tolist(),
        loading_steps=trajectory.loading_steps,
        meta=trajectory.meta,
    )
    return _write(path, data)


def load_trajectory(path: Path) -> Trajectory:
    data = _read(path, TrajectoryFile)
    try:
        return Trajectory(
            states=np.array(data.states, dtype=float).reshape(len(data.states), -1, 2),
            dt=data.dt,
            inlet_flow=np.array(data.inlet_flow),
            loading_steps=data.loading_steps,
            graph_ref=data.graph_id,
            id=data.id,
            source_id=data.source_id,
            meta=data.meta,
        )
    except ValueError as e:
        raise DatasetError(f"Trajectory {path} has ragged states: {e}") from e


def save_geometry(
    geometry: Geometry1D,
    wall: WallModel,
    bcs: Dict[int, RcrParams],
    path: Path,
) -> Path:
    """Write a geometry together with its wall constants and outlet BC table."""
    data = GeometryFile(
        id=geometry.id,
        segments=[
            SegmentRecord(
                z=seg.z.tolist(),
                A0=seg.A0.tolist(),
                r0=seg.r0.tolist(),
                p0=seg.p0.tolist(),
                points=None if seg.points is None else seg.points.tolist(),
            )
            for seg in geometry.segments
        ],
        junctions=[JunctionRecord(upstream=j.upstream, downstream=list(j.downstream)) for j in geometry.junctions],
        inlet_segment=geometry.inlet_segment,
        wall=WallRecord(k1=wall.k1, k2=wall.k2, k3=wall.k3),
        bcs=[SegmentBcRecord(segment=s, **bc.to_dict()) for s, bc in sorted(bcs.items())],
    )
    return _write(path, data)


def load_geometry(path: Path) -> Tuple[Geometry1D, WallModel, Dict[int, RcrParams]]:
    data = _read(path, GeometryFile)
    try:
        geometry = Geometry1D(
            segments=[
                Segment1D(
                    z=np.array(seg.z),
                    A0=np.array(seg.A0),
                    r0=np.array(seg.r0),
                    p0=np.array(seg.p0),
                    points=None if seg.points is None else np.array(seg.points),
                )
                for seg in data.segments
            ],
            junctions=[Junction1D(upstream=j.upstream, downstream=list(j.downstream)) for j in data.junctions],
            inlet_segment=data.inlet_segment,
            id=data.id,
        )
        wall = WallModel(k1=data.wall.k1, k2=data.wall.k2, k3=data.wall.k3)
        bcs = {record.segment: _bc(record) for record in data.bcs}
    except HemoError as e:
        raise DatasetError(f"Geometry {path} is invalid: {e}") from e
    return geometry, wall, bcs


def save_norm_stats(stats: NormStats, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"schema_version": SCHEMA_VERSION, **stats.to_dict()}
    path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    return path


def load_norm_stats(path: Path) -> NormStats:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"File not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"Invalid normalization statistics in {path}: {e}") from e
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(f"{path} has schema version {payload.get('schema_version')}, expected {SCHEMA_VERSION}")
    try:
        return NormStats.from_dict(payload)
    except HemoError as e:
        raise DatasetError(f"Invalid normalization statistics in {path}: {e}") from e
