"""Loading ramps and constant-step resampling of simulated trajectories."""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from hemo_gnn.errors import ContractError
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.utils.constants import LOADING_TIME

logger = logging.getLogger(__name__)

MIN_SPLINE_SAMPLES = 4


def loading_step_count(T_l: float, dt: float) -> int:
    """Number of ramp states covering T_l; T_l must be a multiple of dt."""
    if T_l < 0:
        raise ContractError(f"Loading time must be non-negative, got {T_l}")
    n = int(round(T_l / dt))
    if abs(n * dt - T_l) > 1e-9 * max(1.0, T_l):
        raise ContractError(f"Loading time {T_l} is not a multiple of dt={dt}")
    return n


def loading_ramp(initial: np.ndarray, p_min: float, n_loading: int) -> np.ndarray:
    """States j = 0..n-1 interpolating linearly from (p_min, 0) toward `initial` of shape (N, 2)."""
    rest = np.zeros_like(initial)
    rest[:, 0] = p_min
    weights = np.arange(n_loading, dtype=float) / max(n_loading, 1)
    return rest[None] + weights[:, None, None] * (initial - rest)[None]


def prepend_loading(trajectory: Trajectory, p_min: float, T_l: float = LOADING_TIME) -> Trajectory:
    """Prepend a linear ramp from the rest state p = p_min, q = 0 to the first state.

    The ramp states carry the loading flag; the state that ends the ramp is the
    original first state, so the cycle itself is left untouched.
    """
    if trajectory.loading_steps:
        raise ContractError(f"Trajectory {trajectory.id} already has a loading phase")
    n_loading = loading_step_count(T_l, trajectory.dt)
    ramp = loading_ramp(trajectory.states[0], p_min, n_loading)
    ramp_inflow = np.arange(n_loading, dtype=float) / max(n_loading, 1) * trajectory.inlet_flow[0]
    return Trajectory(
        states=np.concatenate([ramp, trajectory.states]),
        dt=trajectory.dt,
        inlet_flow=np.concatenate([ramp_inflow, trajectory.inlet_flow]),
        loading_steps=n_loading,
        graph_ref=trajectory.graph_ref,
        id=trajectory.id,
        source_id=trajectory.source_id,
        meta=dict(trajectory.meta),
    )


def loading_inlet_series(inflow: np.ndarray, n_loading: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Inlet flows and loading flags of states 1..m when a rollout starts from rest.

    States 1..n_loading-1 follow the ramp and state n_loading is the cycle start.
    `inflow` holds one period without its repeated endpoint.
    """
    inflow = np.asarray(inflow, dtype=float)
    if inflow.size == 0:
        raise ContractError("Inflow waveform is empty")
    series = np.empty(m)
    flags = np.zeros(m, dtype=bool)
    for j in range(m):
        state = j + 1
        if state < n_loading:
            series[j] = state / n_loading * inflow[0]
            flags[j] = True
        else:
            series[j] = inflow[(state - n_loading) % inflow.size]
    return series, flags


def resample_trajectory(
    trajectory: Trajectory,
    dt_target: float,
    times: Optional[np.ndarray] = None,
) -> Trajectory:
    """Natural cubic-spline resampling of every node's p and q onto a grid of spacing dt_target.

    Args:
        trajectory: Source trajectory
        dt_target: Target time step
        times: Sample times of the source states; defaults to its uniform grid

    Returns:
        Trajectory at dt_target whose first and last states equal the source ones
    """
    if dt_target <= 0:
        raise ContractError(f"Target dt must be positive, got {dt_target}")
    if trajectory.loading_steps:
        raise ContractError("Resample before prepending the loading phase")
    if trajectory.n_steps < MIN_SPLINE_SAMPLES:
        raise ContractError(
            f"Cubic-spline resampling needs at least {MIN_SPLINE_SAMPLES} samples, got {trajectory.n_steps}"
        )

    source_times = trajectory.times if times is None else np.asarray(times, dtype=float)
    if source_times.shape != (trajectory.n_steps,):
        raise ContractError("Provide one sample time per state")
    if np.any(np.diff(source_times) <= 0):
        raise ContractError("Source sample times must be strictly increasing")

    t0, t_end = source_times[0], source_times[-1]
    n_intervals = int(np.floor((t_end - t0) / dt_target + 1e-9))
    target_times = t0 + np.arange(n_intervals + 1) * dt_target

    spline = CubicSpline(source_times, trajectory.states, axis=0, bc_type="natural")
    inflow_spline = CubicSpline(source_times, trajectory.inlet_flow, bc_type="natural")
    states = spline(target_times)
    inlet_flow = inflow_spline(target_times)
    states[0] = trajectory.states[0]
    inlet_flow[0] = trajectory.inlet_flow[0]
    if np.isclose(target_times[-1], t_end, rtol=0.0, atol=1e-9 * max(1.0, t_end)):
        states[-1] = trajectory.states[-1]
        inlet_flow[-1] = trajectory.inlet_flow[-1]

    logger.debug(f"Resampled {trajectory.id or 'trajectory'}: {trajectory.n_steps} -> {states.shape[0]} states")
    return Trajectory(
        states=states,
        dt=dt_target,
        inlet_flow=inlet_flow,
        graph_ref=trajectory.graph_ref,
        id=trajectory.id,
        source_id=trajectory.source_id,
        meta=dict(trajectory.meta),
    )
