"""Implicit 1D blood-flow solver on segmented vessel trees.

Fields are continuous and piecewise linear along each segment. Every
element contributes one integrated continuity row and one integrated
momentum row:

    dA/dt + dq/dz = 0
    dq/dt + d/dz(4/3 q^2/A) = -8 pi nu q/A + nu d2q/dz2 - (A/rho) dp/dz

Time is discretised with implicit Euler. Each segment end adds one
boundary row: the prescribed inlet flow, junction flow conservation and
pressure continuity, or the outlet Windkessel coupling. Newton's method
uses pressure as the nodal unknown (areas follow from the wall law),
a finite-difference Jacobian evaluated one column colour at a time, and
a sparse LU solve.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import spsolve

from hemo_gnn.config.settings import SolverConfig
from hemo_gnn.errors import ContractError, DomainError, NumericalError, SolverError
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.hemo1d.boundary import BcMode, RcrParams
from hemo_gnn.hemo1d.geometry import Geometry1D
from hemo_gnn.hemo1d.wall import WallModel, wall_area, wall_pressure

logger = logging.getLogger(__name__)

_FD_STEP = math.sqrt(np.finfo(float).eps)


@dataclass
class SolverState:
    """Per-segment areas and flows plus capacitor pressures keyed by outlet segment."""

    A: List[np.ndarray]
    q: List[np.ndarray]
    Pc: Dict[int, float] = field(default_factory=dict)


@dataclass
class StepReport:
    iterations: int
    residual_norm: float
    junction_imbalance: float


class OneDSolver:
    """Residual assembly and Newton time stepping for one geometry and BC set."""

    def __init__(
        self,
        geometry: Geometry1D,
        wall: WallModel,
        bcs: Dict[int, RcrParams],
        config: Optional[SolverConfig] = None,
    ):
        self.geometry = geometry
        self.wall = wall
        self.config = config or SolverConfig()
        self.bcs = dict(bcs)

        outlets = geometry.outlet_segments
        missing = [s for s in outlets if s not in self.bcs]
        if missing:
            raise ContractError(f"Missing outlet boundary conditions for segments {missing}")
        extra = [s for s in self.bcs if s not in outlets]
        if extra:
            raise ContractError(f"Boundary conditions given for non-outlet segments {extra}")

        self._offsets: List[int] = []
        offset = 0
        for segment in geometry.segments:
            self._offsets.append(offset)
            offset += 2 * segment.n_nodes
        self._pc_index: Dict[int, int] = {}
        for s in outlets:
            if self.bcs[s].mode is BcMode.RCR:
                self._pc_index[s] = offset
                offset += 1
        self.n_unknowns = offset

        self._h = [np.diff(seg.z) for seg in geometry.segments]
        self._stiffness = [wall.stiffness(seg.r0) for seg in geometry.segments]

        self._build_row_layout()
        self._pattern: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._colors: Optional[List[np.ndarray]] = None

    # ------------------------------------------------------------------
    # Layout
    # ------------------------------------------------------------------

    def _p_slice(self, s: int) -> slice:
        n = self.geometry.segments[s].n_nodes
        return slice(self._offsets[s], self._offsets[s] + n)

    def _q_slice(self, s: int) -> slice:
        n = self.geometry.segments[s].n_nodes
        return slice(self._offsets[s] + n, self._offsets[s] + 2 * n)

    def _p_index(self, s: int, i: int) -> int:
        n = self.geometry.segments[s].n_nodes
        return self._offsets[s] + (i % n)

    def _q_index(self, s: int, i: int) -> int:
        n = self.geometry.segments[s].n_nodes
        return self._offsets[s] + n + (i % n)

    def _build_row_layout(self) -> None:
        """Assign residual rows: element rows per segment, then boundary rows."""
        row = 0
        self.continuity_rows: List[slice] = []
        self.momentum_rows: List[slice] = []
        for segment in self.geometry.segments:
            n_el = segment.n_nodes - 1
            self.continuity_rows.append(slice(row, row + n_el))
            self.momentum_rows.append(slice(row + n_el, row + 2 * n_el))
            row += 2 * n_el
        self.inlet_row = row
        row += 1
        self.junction_rows: List[List[int]] = []
        for junction in self.geometry.junctions:
            count = 1 + len(junction.downstream)
            self.junction_rows.append(list(range(row, row + count)))
            row += count
        self.outlet_rows: Dict[int, List[int]] = {}
        for s in self.geometry.outlet_segments:
            count = 2 if s in self._pc_index else 1
            self.outlet_rows[s] = list(range(row, row + count))
            row += count
        if row != self.n_unknowns:
            raise ContractError(f"Residual has {row} rows for {self.n_unknowns} unknowns")

    # ------------------------------------------------------------------
    # State conversion
    # ------------------------------------------------------------------

    def _areas(self, s: int, p: np.ndarray) -> np.ndarray:
        seg = self.geometry.segments[s]
        return wall_area(self.wall, p, seg.A0, seg.r0, seg.p0)

    def pack(self, state: SolverState) -> np.ndarray:
        """Flatten a SolverState into the Newton unknown vector (pressures, flows, Pc)."""
        x = np.zeros(self.n_unknowns)
        for s, seg in enumerate(self.geometry.segments):
            x[self._p_slice(s)] = wall_pressure(self.wall, state.A[s], seg.A0, seg.r0, seg.p0)
            x[self._q_slice(s)] = state.q[s]
        for s, index in self._pc_index.items():
            x[index] = state.Pc.get(s, 0.0)
        return x

    def unpack(self, x: np.ndarray) -> SolverState:
        A = [np.asarray(self._areas(s, x[self._p_slice(s)])) for s in range(len(self.geometry.segments))]
        q = [x[self._q_slice(s)].copy() for s in range(len(self.geometry.segments))]
        Pc = {s: float(x[index]) for s, index in self._pc_index.items()}
        return SolverState(A=A, q=q, Pc=Pc)

    def rest_state(self) -> np.ndarray:
        """Zero flow at the reference pressure; capacitors at the outlet reference pressure."""
        x = np.zeros(self.n_unknowns)
        for s, seg in enumerate(self.geometry.segments):
            x[self._p_slice(s)] = seg.p0
        for s, index in self._pc_index.items():
            x[index] = self.geometry.segments[s].p0[-1]
        return x

    def state_from_nodes(self, pressure: np.ndarray, flow: np.ndarray) -> np.ndarray:
        """Unknown vector from graph-ordered nodal pressure and flow.

        The first node of a downstream segment is not a graph node; it takes
        the junction-point pressure and the flow of its neighbour.
        """
        index = self.geometry.graph_index()
        order = self.geometry.node_order()
        x = np.zeros(self.n_unknowns)
        for (s, i), g in index.items():
            x[self._p_index(s, i)] = pressure[g]
            x[self._q_index(s, i)] = flow[g]
        downstream = {d for j in self.geometry.junctions for d in j.downstream}
        lookup = {key: g for g, key in enumerate(order)}
        for d in downstream:
            if (d, 1) in lookup:
                x[self._q_index(d, 0)] = flow[lookup[(d, 1)]]
        for s, pc_index in self._pc_index.items():
            bc = self.bcs[s]
            x[pc_index] = x[self._p_index(s, -1)] - bc.Rp * x[self._q_index(s, -1)]
        return x

    def to_nodes(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Graph-ordered nodal pressure and flow."""
        order = self.geometry.node_order()
        p = np.array([x[self._p_index(s, i)] for s, i in order])
        q = np.array([x[self._q_index(s, i)] for s, i in order])
        return p, q

    # ------------------------------------------------------------------
    # Residual
    # ------------------------------------------------------------------

    def _segment_rows(self, s, A, p, q, A_prev, q_prev, out):
        dt = self.config.dt
        nu = self.config.kinematic_viscosity
        rho = self.config.density
        h = self._h[s]

        out[self.continuity_rows[s]] = h * (A[:-1] + A[1:] - A_prev[:-1] - A_prev[1:]) / (2.0 * dt) + (q[1:] - q[:-1])

        flux = (4.0 / 3.0) * q ** 2 / A
        friction = 8.0 * np.pi * nu * q / A
        slopes = np.diff(q) / h
        nodal_slope = np.empty_like(q)
        nodal_slope[0] = slopes[0]
        nodal_slope[-1] = slopes[-1]
        if q.shape[0] > 2:
            nodal_slope[1:-1] = 0.5 * (slopes[:-1] + slopes[1:])

        out[self.momentum_rows[s]] = (
            h * (q[:-1] + q[1:] - q_prev[:-1] - q_prev[1:]) / (2.0 * dt)
            + (flux[1:] - flux[:-1])
            + h * 0.5 * (friction[:-1] + friction[1:])
            + (A[:-1] + A[1:]) / (2.0 * rho) * (p[1:] - p[:-1])
            - nu * np.diff(nodal_slope)
        )

    def _assemble(self, A, p, q, Pc, A_prev, q_prev, Pc_prev, q_in) -> np.ndarray:
        out = np.zeros(self.n_unknowns)
        for s in range(len(self.geometry.segments)):
            self._segment_rows(s, A[s], p[s], q[s], A_prev[s], q_prev[s], out)

        out[self.inlet_row] = q[self.geometry.inlet_segment][0] - q_in

        for junction, rows in zip(self.geometry.junctions, self.junction_rows):
            up = junction.upstream
            out[rows[0]] = q[up][-1] - sum(q[d][0] for d in junction.downstream)
            for row, d in zip(rows[1:], junction.downstream):
                out[row] = p[up][-1] - p[d][0]

        dt = self.config.dt
        for s, rows in self.outlet_rows.items():
            bc = self.bcs[s]
            q_out = q[s][-1]
            if bc.mode is BcMode.RESISTANCE:
                out[rows[0]] = p[s][-1] - bc.Rp * q_out
            else:
                out[rows[0]] = p[s][-1] - (Pc[s] + bc.Rp * q_out)
                out[rows[1]] = Pc[s] * (1.0 + dt / (bc.Rd * bc.C)) - Pc_prev[s] - dt * q_out / bc.C
        return out

    def residual(self, x: np.ndarray, x_prev: np.ndarray, q_in: float) -> np.ndarray:
        """Residual of the implicit step from x_prev to x with inlet flow q_in."""
        segments = range(len(self.geometry.segments))
        p = [x[self._p_slice(s)] for s in segments]
        q = [x[self._q_slice(s)] for s in segments]
        A = [self._areas(s, p[s]) for s in segments]
        p_prev = [x_prev[self._p_slice(s)] for s in segments]
        A_prev = [self._areas(s, p_prev[s]) for s in segments]
        q_prev = [x_prev[self._q_slice(s)] for s in segments]
        Pc = {s: x[i] for s, i in self._pc_index.items()}
        Pc_prev = {s: x_prev[i] for s, i in self._pc_index.items()}
        return self._assemble(A, p, q, Pc, A_prev, q_prev, Pc_prev, q_in)

    def assemble(self, state: SolverState, prev_state: SolverState, q_in: float) -> np.ndarray:
        """Residual for states given as areas and flows."""
        for array in [*state.A, *state.q, *prev_state.A, *prev_state.q, *state.Pc.values(), *prev_state.Pc.values()]:
            if not np.all(np.isfinite(array)):
                raise NumericalError("Non-finite value in solver state")
        segments = self.geometry.segments
        p = [wall_pressure(self.wall, state.A[s], seg.A0, seg.r0, seg.p0) for s, seg in enumerate(segments)]
        p = [np.atleast_1d(np.asarray(values, dtype=float)) for values in p]
        A = [np.asarray(a, dtype=float) for a in state.A]
        q = [np.asarray(values, dtype=float) for values in state.q]
        A_prev = [np.asarray(a, dtype=float) for a in prev_state.A]
        q_prev = [np.asarray(values, dtype=float) for values in prev_state.q]
        return self._assemble(A, p, q, state.Pc, A_prev, q_prev, prev_state.Pc, q_in)

    # ------------------------------------------------------------------
    # Jacobian
    # ------------------------------------------------------------------

    def _build_pattern(self) -> None:
        """Structural sparsity of the residual and a column colouring for finite differences."""
        rows: List[int] = []
        cols: List[int] = []

        def add(row, columns):
            for c in columns:
                rows.append(row)
                cols.append(c)

        for s, seg in enumerate(self.geometry.segments):
            n = seg.n_nodes
            c_rows = range(self.continuity_rows[s].start, self.continuity_rows[s].stop)
            m_rows = range(self.momentum_rows[s].start, self.momentum_rows[s].stop)
            for e, (rc, rm) in enumerate(zip(c_rows, m_rows)):
                nodes = [e, e + 1]
                add(rc, [self._p_index(s, i) for i in nodes] + [self._q_index(s, i) for i in nodes])
                # the nodal slope couples flows one node beyond the element
                stencil = range(max(0, e - 1), min(n, e + 3))
                add(rm, [self._p_index(s, i) for i in nodes] + [self._q_index(s, i) for i in stencil])

        add(self.inlet_row, [self._q_index(self.geometry.inlet_segment, 0)])
        for junction, j_rows in zip(self.geometry.junctions, self.junction_rows):
            up = junction.upstream
            add(j_rows[0], [self._q_index(up, -1)] + [self._q_index(d, 0) for d in junction.downstream])
            for row, d in zip(j_rows[1:], junction.downstream):
                add(row, [self._p_index(up, -1), self._p_index(d, 0)])
        for s, o_rows in self.outlet_rows.items():
            base = [self._p_index(s, -1), self._q_index(s, -1)]
            if s in self._pc_index:
                add(o_rows[0], base + [self._pc_index[s]])
                add(o_rows[1], [self._q_index(s, -1), self._pc_index[s]])
            else:
                add(o_rows[0], base)

        pattern = np.unique(np.array([rows, cols]).T, axis=0)
        self._pattern = (pattern[:, 0], pattern[:, 1])

        conflicts = nx.Graph()
        conflicts.add_nodes_from(range(self.n_unknowns))
        by_row: Dict[int, List[int]] = {}
        for r, c in pattern:
            by_row.setdefault(int(r), []).append(int(c))
        for columns in by_row.values():
            for a in range(len(columns)):
                for b in range(a + 1, len(columns)):
                    conflicts.add_edge(columns[a], columns[b])
        coloring = nx.greedy_color(conflicts, strategy="largest_first")
        n_colors = max(coloring.values()) + 1
        color_of = np.array([coloring[c] for c in range(self.n_unknowns)])
        self._colors = [np.flatnonzero(color_of == k) for k in range(n_colors)]
        self._entry_colors = color_of[self._pattern[1]]
        logger.debug(f"Jacobian pattern: {len(pattern)} entries, {n_colors} colours for {self.n_unknowns} unknowns")

    def jacobian(self, x: np.ndarray, F: np.ndarray, x_prev: np.ndarray, q_in: float) -> csc_matrix:
        """Finite-difference Jacobian, one residual evaluation per column colour."""
        if self._pattern is None:
            self._build_pattern()
        rows, cols = self._pattern
        values = np.zeros(rows.shape[0])
        eps = _FD_STEP * np.maximum(np.abs(x), 1.0)
        for k, columns in enumerate(self._colors):
            x_pert = x.copy()
            x_pert[columns] += eps[columns]
            F_pert = self.residual(x_pert, x_prev, q_in)
            entries = self._entry_colors == k
            values[entries] = (F_pert[rows[entries]] - F[rows[entries]]) / eps[cols[entries]]
        return csc_matrix((values, (rows, cols)), shape=(self.n_unknowns, self.n_unknowns))

    # ------------------------------------------------------------------
    # Time stepping
    # ------------------------------------------------------------------

    def junction_imbalance(self, x: np.ndarray) -> float:
        """Largest |sum q_in - sum q_out| over junctions."""
        worst = 0.0
        for junction in self.geometry.junctions:
            q_up = x[self._q_index(junction.upstream, -1)]
            q_down = sum(x[self._q_index(d, 0)] for d in junction.downstream)
            worst = max(worst, abs(q_up - q_down))
        return worst

    def step(self, x_prev: np.ndarray, q_in: float, step_index: int = 0) -> Tuple[np.ndarray, StepReport]:
        """Advance one time step with damped Newton iterations."""
        x = x_prev.copy()
        x[self._q_index(self.geometry.inlet_segment, 0)] = q_in
        F = self.residual(x, x_prev, q_in)
        norm = float(np.linalg.norm(F))
        scale = max(norm, 1.0)
        tol = self.config.newton_tol * scale

        iterations = 0
        imbalance = self.junction_imbalance(x)
        while norm > tol or imbalance > self.config.junction_tol:
            if iterations >= self.config.newton_max_iter:
                raise SolverError(
                    f"Newton did not converge at step {step_index}: residual norm {norm:.3e}",
                    step=step_index,
                    residual_norm=norm,
                )
            J = self.jacobian(x, F, x_prev, q_in)
            dx = spsolve(J, -F)
            if not np.all(np.isfinite(dx)):
                raise SolverError(f"Singular Newton system at step {step_index}", step=step_index, residual_norm=norm)

            if norm <= tol:
                # only the junction rows are off; they are linear, so a full step closes them
                x_try = x + dx
                F_try = self.residual(x_try, x_prev, q_in)
                norm_try = float(np.linalg.norm(F_try))
            else:
                damping = 1.0
                while True:
                    x_try = x + damping * dx
                    try:
                        F_try = self.residual(x_try, x_prev, q_in)
                        norm_try = float(np.linalg.norm(F_try))
                    except DomainError:
                        norm_try = math.inf
                    if norm_try < norm or damping < 1.0 / 64:
                        break
                    damping *= 0.5
            if not math.isfinite(norm_try):
                raise SolverError(f"Newton update left the wall-law domain at step {step_index}", step=step_index)
            x, F, norm = x_try, F_try, norm_try
            imbalance = self.junction_imbalance(x)
            iterations += 1

        return x, StepReport(iterations=iterations, residual_norm=norm, junction_imbalance=imbalance)

    def run(self, inflow: np.ndarray, n_steps: int, x0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Dict]:
        """Integrate n_steps steps; returns graph-ordered states (n_steps+1, N, 2) and diagnostics."""
        inflow = np.asarray(inflow, dtype=float)
        if inflow.shape[0] < n_steps + 1:
            raise ContractError(f"Inflow series has {inflow.shape[0]} samples, need {n_steps + 1}")
        x = self.rest_state() if x0 is None else np.asarray(x0, dtype=float).copy()
        x[self._q_index(self.geometry.inlet_segment, 0)] = inflow[0]

        n_nodes = self.geometry.n_graph_nodes
        states = np.zeros((n_steps + 1, n_nodes, 2))
        p, q = self.to_nodes(x)
        states[0, :, 0], states[0, :, 1] = p, q

        max_imbalance = 0.0
        max_iterations = 0
        max_residual = 0.0
        max_area_deviation = 0.0
        for k in range(1, n_steps + 1):
            x, report = self.step(x, inflow[k], step_index=k)
            p, q = self.to_nodes(x)
            states[k, :, 0], states[k, :, 1] = p, q
            max_imbalance = max(max_imbalance, report.junction_imbalance)
            max_iterations = max(max_iterations, report.iterations)
            max_residual = max(max_residual, report.residual_norm)
            for s, seg in enumerate(self.geometry.segments):
                A = self._areas(s, x[self._p_slice(s)])
                max_area_deviation = max(max_area_deviation, float(np.max(np.abs(A / seg.A0 - 1.0))))

        diagnostics = {
            "max_junction_imbalance": max_imbalance,
            "max_newton_iterations": max_iterations,
            "max_residual_norm": max_residual,
            "max_area_deviation": max_area_deviation,
        }
        return states, diagnostics


def assemble_residual(
    geometry: Geometry1D,
    wall: WallModel,
    bcs: Dict[int, RcrParams],
    state: SolverState,
    prev_state: SolverState,
    inlet_flow: float,
    config: Optional[SolverConfig] = None,
) -> np.ndarray:
    """Residual of one implicit step for the given current and previous states."""
    return OneDSolver(geometry, wall, bcs, config).assemble(state, prev_state, inlet_flow)


def simulate(
    geometry: Geometry1D,
    wall: WallModel,
    bcs: Dict[int, RcrParams],
    inflow_series,
    T: float,
    config: Optional[SolverConfig] = None,
    initial: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Trajectory:
    """Simulate [0, T] at config.dt and return graph-ordered pressure and flow.

    Args:
        geometry: Segmented geometry
        wall: Wall-law constants
        bcs: Outlet boundary conditions keyed by outlet segment
        inflow_series: Inlet flow sampled at config.dt over [0, T]
        T: Duration in seconds
        config: Solver settings
        initial: Optional graph-ordered (pressure, flow) to start from

    Returns:
        Trajectory at the solver time step; diagnostics are stored in meta
    """
    config = config or SolverConfig()
    solver = OneDSolver(geometry, wall, bcs, config)
    n_steps = int(round(T / config.dt))
    if abs(n_steps * config.dt - T) > 1e-9 * max(1.0, T):
        raise ContractError(f"Duration {T} is not a multiple of dt={config.dt}")

    x0 = None if initial is None else solver.state_from_nodes(*initial)
    states, diagnostics = solver.run(np.asarray(inflow_series, dtype=float), n_steps, x0)
    logger.debug(
        f"Simulated {geometry.id or 'geometry'} for {n_steps} steps: "
        f"max imbalance {diagnostics['max_junction_imbalance']:.2e}, "
        f"max Newton iterations {diagnostics['max_newton_iterations']}"
    )

    return Trajectory(
        states=states,
        dt=config.dt,
        inlet_flow=np.asarray(inflow_series, dtype=float)[: n_steps + 1],
        graph_ref=geometry.id,
        meta=diagnostics,
    )
