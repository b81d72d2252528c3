"""Synthetic vessel geometries: straight tubes, single bifurcations and binary trees.

Child radii follow Murray's law, r_child = r_parent * 2^(-1/exponent) for a
symmetric split, and outlet boundary conditions are split from one
tree-level Windkessel in proportion to r^3 of each outlet.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from hemo_gnn.config.loader import ConfigError
from hemo_gnn.errors import ContractError
from hemo_gnn.graph.centerline import INLET, JUNCTION, OUTLET, CenterlineGraph, add_boundary_edges, build_graph
from hemo_gnn.hemo1d.boundary import BcMode, RcrParams
from hemo_gnn.hemo1d.geometry import Geometry1D, Junction1D, Segment1D

logger = logging.getLogger(__name__)

MIN_AREA = 0.1  # cm^2
MAX_AREA = 6.9  # cm^2


class TemplateKind(str, Enum):
    TUBE = "tube"
    BIFURCATION = "bifurcation"
    TREE = "tree"


class InflowSpec(BaseModel):
    """Periodic inlet flow q(t) = mean + sum_k a_k cos(2 pi k t / T_cc - phi_k) in cm^3/s."""

    model_config = ConfigDict(extra="forbid")

    mean: float = Field(10.0, gt=0)
    amplitudes: List[float] = Field(default_factory=lambda: [6.0, 3.0, 1.0])
    phases: List[float] = Field(default_factory=lambda: [0.0, 0.8, 1.6])
    T_cc: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check_harmonics(self):
        if len(self.amplitudes) != len(self.phases):
            raise ValueError("amplitudes and phases must have the same length")
        return self

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        q = np.full(t.shape, self.mean)
        for k, (a, phi) in enumerate(zip(self.amplitudes, self.phases), start=1):
            q = q + a * np.cos(2.0 * math.pi * k * t / self.T_cc - phi)
        return q

    def sample(self, dt: float, n_steps: int) -> np.ndarray:
        """Values at t = 0, dt, ..., n_steps * dt."""
        return self.evaluate(np.arange(n_steps + 1) * dt)

    def scaled(self, factor: float) -> "InflowSpec":
        return self.model_copy(
            update={"mean": self.mean * factor, "amplitudes": [a * factor for a in self.amplitudes]}
        )


class OutletSpec(BaseModel):
    """Windkessel of the whole tree; outlets get parallel shares of it."""

    model_config = ConfigDict(extra="forbid")

    Rp: float = Field(1.2e3, ge=0)
    C: float = Field(8.0e-5, ge=0)
    Rd: float = Field(1.2e4, ge=0)
    mode: BcMode = BcMode.RCR

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode is BcMode.RCR and (self.C <= 0 or self.Rd <= 0):
            raise ValueError("rcr outlets need C > 0 and Rd > 0")
        if self.mode is BcMode.RESISTANCE and self.Rp <= 0:
            raise ValueError("resistance outlets need Rp > 0")
        return self

    def share(self, fraction: float) -> RcrParams:
        """Parameters of one outlet carrying `fraction` of the total flow."""
        if self.mode is BcMode.RESISTANCE:
            return RcrParams.resistance(self.Rp / fraction)
        return RcrParams(Rp=self.Rp / fraction, C=self.C * fraction, Rd=self.Rd / fraction)


class GeometrySpec(BaseModel):
    """Parameters of one synthetic geometry template."""

    model_config = ConfigDict(extra="forbid")

    id: str
    template: TemplateKind = TemplateKind.BIFURCATION
    length: float = Field(10.0, gt=0)
    radius: float = Field(1.0, gt=0)
    taper: float = Field(1.0, gt=0, le=1.0)
    length_ratio: float = Field(0.8, gt=0)
    branch_angle: float = Field(30.0, gt=0, lt=90)
    murray_exponent: float = Field(3.0, gt=0)
    generations: int = Field(1, ge=1, le=6)
    nodes_per_segment: int = Field(11, ge=2)
    radius_jitter: float = Field(0.0, ge=0, lt=1)
    reference_pressure: float = 0.0
    inflow: InflowSpec = Field(default_factory=InflowSpec)
    outlet: OutletSpec = Field(default_factory=OutletSpec)

    @property
    def depth(self) -> int:
        """Number of bifurcation levels."""
        if self.template is TemplateKind.TUBE:
            return 0
        if self.template is TemplateKind.BIFURCATION:
            return 1
        return self.generations


class SpecFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    geometries: List[GeometrySpec]


def load_specs(path: Path) -> List[GeometrySpec]:
    """Read geometry specs from YAML: a list, or a mapping with a `geometries` list."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Geometry spec file not found: {path}")
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse geometry spec file: {e}")
    if isinstance(raw, list):
        raw = {"geometries": raw}
    if not raw:
        raise ConfigError(f"Geometry spec file {path} is empty")
    try:
        specs = SpecFile.model_validate(raw).geometries
    except ValidationError as e:
        raise ConfigError(f"Invalid geometry spec in {path}:\n{e}")
    ids = [spec.id for spec in specs]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"Geometry ids in {path} must be unique")
    return specs


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    x, y, z = axis
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * K @ K


def _segment(spec: GeometrySpec, origin, direction, length, r_start, jitter) -> Segment1D:
    z = np.linspace(0.0, length, spec.nodes_per_segment)
    r = r_start * (1.0 + (spec.taper - 1.0) * z / length) * jitter
    points = np.asarray(origin)[None, :] + z[:, None] * np.asarray(direction)[None, :]
    return Segment1D(z=z, A0=math.pi * r ** 2, r0=r, p0=spec.reference_pressure, points=points)


@dataclass
class GeneratedGeometry:
    """A template instance: 1D geometry, matching centerline graph and base outlet conditions.

    The graph carries the reference pressure as p_min and p_max until a simulation fixes them.
    """

    geometry: Geometry1D
    graph: CenterlineGraph
    bcs: Dict[int, RcrParams]


def generate_geometry(spec: GeometrySpec, rng: Optional[np.random.Generator] = None) -> GeneratedGeometry:
    """Build the segmented geometry of a template, its centerline graph and outlet conditions keyed by segment."""
    rng = rng or np.random.default_rng(0)
    segments: List[Segment1D] = []
    junctions: List[Junction1D] = []
    plane_axes = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])]
    split = 2.0 ** (-1.0 / spec.murray_exponent)
    angle = math.radians(spec.branch_angle)

    def jitter() -> float:
        if spec.radius_jitter == 0:
            return 1.0
        return float(rng.uniform(1.0 - spec.radius_jitter, 1.0 + spec.radius_jitter))

    def grow(origin, direction, length, radius, level) -> int:
        index = len(segments)
        segments.append(_segment(spec, origin, direction, length, radius, jitter()))
        if level < spec.depth:
            end = segments[index].points[-1]
            r_end = segments[index].r0[-1]
            axis = plane_axes[level % 2]
            children = []
            for sign in (1.0, -1.0):
                child_direction = _rotation(axis, sign * angle) @ direction
                children.append(grow(end, child_direction, length * spec.length_ratio, r_end * split, level + 1))
            junctions.append(Junction1D(upstream=index, downstream=children))
        return index

    grow(np.zeros(3), np.array([1.0, 0.0, 0.0]), spec.length, spec.radius, 0)
    geometry = Geometry1D(segments=segments, junctions=junctions, id=spec.id)

    areas = np.concatenate([s.A0 for s in segments])
    if areas.min() < MIN_AREA or areas.max() > MAX_AREA:
        raise ContractError(
            f"Geometry {spec.id} has areas in [{areas.min():.3f}, {areas.max():.3f}] cm^2, "
            f"outside [{MIN_AREA}, {MAX_AREA}]"
        )

    outlets = geometry.outlet_segments
    weights = np.array([segments[s].r0[-1] ** 3 for s in outlets])
    bcs = {s: spec.outlet.share(w / weights.sum()) for s, w in zip(outlets, weights)}
    graph = centerline_graph(
        geometry,
        bcs,
        T_cc=spec.inflow.T_cc,
        p_min=spec.reference_pressure,
        p_max=spec.reference_pressure,
        inflow=None,
        id=spec.id,
    )
    logger.debug(f"Generated {spec.template.value} geometry {spec.id}: {len(segments)} segments, {graph.n_nodes} nodes")
    return GeneratedGeometry(geometry=geometry, graph=graph, bcs=bcs)


def centerline_graph(
    geometry: Geometry1D,
    bcs: Dict[int, RcrParams],
    T_cc: float,
    p_min: float,
    p_max: float,
    dt: Optional[float] = None,
    inflow=None,
    id: str = "",
    boundary_edges: bool = True,
) -> CenterlineGraph:
    """Centerline graph on the geometry's node order with reference areas and typed nodes."""
    order = geometry.node_order()
    index = geometry.graph_index()
    n = len(order)
    for s, segment in enumerate(geometry.segments):
        if segment.points is None:
            raise ContractError(f"Segment {s} has no node positions")

    positions = np.array([geometry.segments[s].points[i] for s, i in order])
    areas = np.array([geometry.segments[s].A0[i] for s, i in order])
    types = np.zeros(n, dtype=int)
    types[index[(geometry.inlet_segment, 0)]] = INLET
    for junction in geometry.junctions:
        types[index[(junction.upstream, geometry.segments[junction.upstream].n_nodes - 1)]] = JUNCTION
        for d in junction.downstream:
            types[index[(d, 1)]] = JUNCTION
    node_bcs = {}
    for s in geometry.outlet_segments:
        node = index[(s, geometry.segments[s].n_nodes - 1)]
        types[node] = OUTLET
        node_bcs[node] = bcs[s]

    edges = [
        (index[(s, i)], index[(s, i + 1)])
        for s, segment in enumerate(geometry.segments)
        for i in range(segment.n_nodes - 1)
    ]
    graph = build_graph(
        positions,
        edges,
        types,
        areas,
        {"T_cc": T_cc, "p_min": p_min, "p_max": p_max},
        node_bcs,
        id=id or geometry.id,
        dt=dt,
        inflow=inflow,
    )
    return add_boundary_edges(graph) if boundary_edges else graph
