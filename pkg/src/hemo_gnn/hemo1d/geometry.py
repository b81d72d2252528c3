"""Segmented 1D geometries: reference profiles along each vessel and junction topology."""

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from hemo_gnn.errors import GraphValidationError, TopologyError


@dataclass
class Segment1D:
    """One vessel segment discretised by axial nodes.

    Attributes:
        z: Axial coordinates (cm), strictly increasing
        A0: Reference lumen area per node (cm^2)
        r0: Reference radius per node (cm)
        p0: Reference pressure per node (barye)
        points: Optional 3D node positions (cm) used to build the centerline graph
    """

    z: np.ndarray
    A0: np.ndarray
    r0: np.ndarray
    p0: np.ndarray
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        n = self.z.shape[0]
        self.A0 = np.broadcast_to(np.asarray(self.A0, dtype=float), (n,)).copy()
        self.r0 = np.broadcast_to(np.asarray(self.r0, dtype=float), (n,)).copy()
        self.p0 = np.broadcast_to(np.asarray(self.p0, dtype=float), (n,)).copy()
        if self.points is not None:
            self.points = np.asarray(self.points, dtype=float)

    @classmethod
    def uniform(
        cls,
        length: float,
        radius: float,
        n_nodes: int,
        p0: float = 0.0,
        direction=(1.0, 0.0, 0.0),
        origin=(0.0, 0.0, 0.0),
    ) -> "Segment1D":
        """Straight cylindrical segment with equally spaced nodes."""
        z = np.linspace(0.0, length, n_nodes)
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        points = np.asarray(origin, dtype=float)[None, :] + z[:, None] * direction[None, :]
        return cls(z=z, A0=np.pi * radius ** 2, r0=radius, p0=p0, points=points)

    @property
    def n_nodes(self) -> int:
        return self.z.shape[0]

    @property
    def length(self) -> float:
        return float(self.z[-1] - self.z[0])

    def validate(self, index: int) -> None:
        if self.n_nodes < 2:
            raise GraphValidationError(f"Segment {index} needs at least two nodes")
        if np.any(np.diff(self.z) <= 0):
            raise GraphValidationError(f"Segment {index} node spacing must be positive")
        if np.any(self.A0 <= 0) or np.any(self.r0 <= 0):
            raise GraphValidationError(f"Segment {index} reference area and radius must be positive")
        if self.points is not None and self.points.shape != (self.n_nodes, 3):
            raise GraphValidationError(f"Segment {index} points must have shape ({self.n_nodes}, 3)")


@dataclass
class Junction1D:
    """A junction joining one upstream segment to one or more downstream segments."""

    upstream: int
    downstream: List[int]


@dataclass
class Geometry1D:
    """Tree of segments rooted at the inlet segment."""

    segments: List[Segment1D]
    junctions: List[Junction1D] = field(default_factory=list)
    inlet_segment: int = 0
    id: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Check positive profiles and a tree topology rooted at the inlet segment."""
        if not self.segments:
            raise TopologyError("A geometry needs at least one segment")
        for index, segment in enumerate(self.segments):
            segment.validate(index)

        n = len(self.segments)
        children: Dict[int, List[int]] = {}
        parents: Dict[int, int] = {}
        for junction in self.junctions:
            if not junction.downstream:
                raise TopologyError(f"Junction at segment {junction.upstream} has no downstream segment")
            if junction.upstream in children:
                raise TopologyError(f"Segment {junction.upstream} feeds more than one junction")
            for s in [junction.upstream, *junction.downstream]:
                if not 0 <= s < n:
                    raise TopologyError(f"Junction references unknown segment {s}")
            children[junction.upstream] = list(junction.downstream)
            for d in junction.downstream:
                if d in parents or d == self.inlet_segment:
                    raise TopologyError(f"Segment {d} has more than one upstream connection")
                parents[d] = junction.upstream

        seen = {self.inlet_segment}
        queue = deque([self.inlet_segment])
        while queue:
            current = queue.popleft()
            for child in children.get(current, []):
                if child in seen:
                    raise TopologyError("Junction topology contains a cycle")
                seen.add(child)
                queue.append(child)
        if len(seen) != n:
            raise TopologyError("Junction topology does not connect every segment to the inlet")

    @property
    def outlet_segments(self) -> List[int]:
        """Segments whose distal end is an outlet, in index order."""
        upstream = {j.upstream for j in self.junctions}
        return [s for s in range(len(self.segments)) if s not in upstream]

    def segment_order(self) -> List[int]:
        """Segments in breadth-first order from the inlet."""
        children = {j.upstream: j.downstream for j in self.junctions}
        order = []
        queue = deque([self.inlet_segment])
        while queue:
            current = queue.popleft()
            order.append(current)
            queue.extend(children.get(current, []))
        return order

    def node_order(self) -> List[Tuple[int, int]]:
        """(segment, local index) of every centerline graph node.

        Downstream segments drop their first node, which coincides with the
        junction point held by the upstream segment.
        """
        downstream = {d for j in self.junctions for d in j.downstream}
        order = []
        for s in self.segment_order():
            start = 1 if s in downstream else 0
            order.extend((s, i) for i in range(start, self.segments[s].n_nodes))
        return order

    def graph_index(self) -> Dict[Tuple[int, int], int]:
        """Map (segment, local index) to graph node index, junction start nodes included."""
        index = {key: i for i, key in enumerate(self.node_order())}
        for junction in self.junctions:
            up = junction.upstream
            point = index[(up, self.segments[up].n_nodes - 1)]
            for d in junction.downstream:
                index[(d, 0)] = point
        return index

    @property
    def n_graph_nodes(self) -> int:
        return len(self.node_order())
