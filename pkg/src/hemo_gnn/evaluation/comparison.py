"""Side-by-side evaluation of the graph network and the 1D solver on the same trajectories."""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from hemo_gnn.config.settings import SolverConfig
from hemo_gnn.datagen.dataset import Dataset
from hemo_gnn.datagen.loading import resample_trajectory
from hemo_gnn.errors import ContractError, DatasetError, HemoError
from hemo_gnn.evaluation.metrics import branch_nodes, relative_errors, rollout_errors
from hemo_gnn.graph.io import load_geometry
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.hemo1d.solver import simulate
from hemo_gnn.mgn.model import GnnModel

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["trajectory_id", "node", "step", "time", "p_true", "p_pred", "q_true", "q_pred"]


@dataclass
class ComparisonRow:
    """Paired errors and runtimes of both model families on one trajectory.

    The 1D columns are None when the re-simulation failed; error holds the reason.
    """

    trajectory_id: str
    gnn_e_p: float
    gnn_e_q: float
    gnn_runtime_s: float
    oned_e_p: Optional[float] = None
    oned_e_q: Optional[float] = None
    oned_runtime_s: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class ComparisonReport:
    rows: List[ComparisonRow] = field(default_factory=list)
    curves: List[Dict[str, Any]] = field(default_factory=list)
    solver_dt: float = 0.0

    @property
    def failures(self) -> List[ComparisonRow]:
        return [r for r in self.rows if r.error is not None]

    def summary(self) -> Dict[str, Any]:
        ok = [r for r in self.rows if r.error is None]

        def mean(values: Sequence[Optional[float]]) -> Optional[float]:
            values = [v for v in values if v is not None]
            return float(np.mean(values)) if values else None

        return {
            "n_trajectories": len(self.rows),
            "n_failed": len(self.failures),
            "solver_dt": self.solver_dt,
            "gnn": {
                "e_p": mean([r.gnn_e_p for r in self.rows]),
                "e_q": mean([r.gnn_e_q for r in self.rows]),
                "runtime_s": mean([r.gnn_runtime_s for r in self.rows]),
            },
            "oned": {
                "e_p": mean([r.oned_e_p for r in ok]),
                "e_q": mean([r.oned_e_q for r in ok]),
                "runtime_s": mean([r.oned_runtime_s for r in ok]),
            },
        }


def resimulate_cycle(
    root: Path,
    geometry_file: str,
    trajectory: Trajectory,
    solver_config: SolverConfig,
) -> Tuple[Trajectory, float]:
    """Re-run the 1D solver over the cycle of a trajectory from its first post-loading state.

    The inlet series of the cycle is interpolated onto the solver step and
    the result resampled back onto the trajectory's step. Returns the
    resampled cycle and the solver wall time in seconds.
    """
    geometry, wall, bcs = load_geometry(Path(root) / geometry_file)
    start_index = trajectory.loading_steps
    cycle_inflow = trajectory.inlet_flow[start_index:]
    if cycle_inflow.size < 2:
        raise DatasetError(f"Trajectory {trajectory.id} has no cycle after its loading phase")
    duration = (cycle_inflow.size - 1) * trajectory.dt
    n_solver = int(round(duration / solver_config.dt))
    if abs(n_solver * solver_config.dt - duration) > 1e-9 * max(1.0, duration):
        raise ContractError(f"Cycle duration {duration} s is not a multiple of solver dt={solver_config.dt}")

    dataset_times = np.arange(cycle_inflow.size) * trajectory.dt
    spline = CubicSpline(dataset_times, cycle_inflow, bc_type="natural")
    solver_inflow = spline(np.arange(n_solver + 1) * solver_config.dt)
    initial = trajectory.states[start_index]

    start = time.perf_counter()
    simulated = simulate(
        geometry, wall, bcs, solver_inflow, duration, solver_config, initial=(initial[:, 0], initial[:, 1])
    )
    runtime = time.perf_counter() - start
    if solver_config.dt != trajectory.dt:
        simulated = resample_trajectory(simulated, trajectory.dt)
    return simulated, runtime


def curve_rows(
    trajectory_id: str,
    truth: np.ndarray,
    predicted: np.ndarray,
    nodes: Sequence[int],
    dt: float,
) -> List[Dict[str, Any]]:
    rows = []
    for node in nodes:
        for step in range(truth.shape[0]):
            rows.append(
                {
                    "trajectory_id": trajectory_id,
                    "node": int(node),
                    "step": step,
                    "time": step * dt,
                    "p_true": float(truth[step, node, 0]),
                    "p_pred": float(predicted[step, node, 0]),
                    "q_true": float(truth[step, node, 1]),
                    "q_pred": float(predicted[step, node, 1]),
                }
            )
    return rows


def compare_models(
    dataset: Dataset,
    model: GnnModel,
    solver_config: Optional[SolverConfig] = None,
    ids: Optional[Sequence[str]] = None,
    solver_dt: Optional[float] = None,
    curve_nodes: int = 20,
    seed: int = 0,
) -> ComparisonReport:
    """GNN rollout errors against 1D re-simulation errors for every trajectory.

    The GNN rolls out the whole trajectory from its first state. The 1D
    solver starts from the first post-loading state and covers the cycle;
    its errors are measured over that cycle on the same branch nodes.
    Solver failures are recorded on the row and the comparison goes on.
    Curves hold GNN predictions for curve_nodes branch nodes drawn with seed.
    """
    if dataset.root is None or dataset.manifest is None:
        raise DatasetError("Comparison needs a dataset loaded from disk with its manifest")
    solver_config = solver_config or dataset.manifest.solver
    if solver_dt is not None:
        solver_config = solver_config.model_copy(update={"dt": solver_dt})
    report = ComparisonReport(solver_dt=solver_config.dt)
    rng = np.random.default_rng(seed)

    for trajectory_id in ids if ids is not None else dataset.ids:
        graph = dataset.graph_of(trajectory_id)
        trajectory = dataset.trajectory(trajectory_id)
        entry = dataset.entry_of(trajectory_id)
        gnn = rollout_errors(model, graph, trajectory)
        row = ComparisonRow(trajectory_id, gnn.e_p, gnn.e_q, gnn.runtime_s)

        branches = branch_nodes(graph)
        sampled = np.sort(rng.choice(branches, size=min(curve_nodes, branches.size), replace=False))
        report.curves.extend(curve_rows(trajectory_id, trajectory.states, gnn.predicted.states, sampled, trajectory.dt))

        try:
            if entry.geometry is None:
                raise DatasetError(f"Entry {entry.source_id} has no geometry file")
            simulated, runtime = resimulate_cycle(dataset.root, entry.geometry, trajectory, solver_config)
            truth = trajectory.states[trajectory.loading_steps :]
            row.oned_e_p, row.oned_e_q = relative_errors(simulated.states, truth, branches)
            row.oned_runtime_s = runtime
        except HemoError as e:
            row.error = str(e)
            logger.warning(f"1D re-simulation of {trajectory_id} failed: {e}")
        report.rows.append(row)
        logger.info(
            f"{trajectory_id}: GNN e_p={row.gnn_e_p:.3e} in {row.gnn_runtime_s:.2f}s, "
            f"1D e_p={row.oned_e_p if row.oned_e_p is not None else 'n/a'}"
        )
    return report
