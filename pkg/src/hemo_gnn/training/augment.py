"""Offset augmentation: the periodic cycle restarted at evenly spaced phases."""

import logging
from typing import List, Optional

import numpy as np

from hemo_gnn.datagen.loading import loading_ramp
from hemo_gnn.errors import ContractError, DatasetError
from hemo_gnn.graph.state import Trajectory

logger = logging.getLogger(__name__)


def augment_offsets(
    trajectory: Trajectory,
    n_offsets: int = 4,
    p_min: Optional[float] = None,
    period: Optional[int] = None,
) -> List[Trajectory]:
    """Rotate the cardiac cycle by i * M / n_offsets steps and regenerate the loading ramp.

    Args:
        trajectory: Loading ramp followed by one periodic cycle of M steps (M + 1 states)
        n_offsets: Number of variants, offset 0 included
        p_min: Rest pressure of the ramp; defaults to the pressure of the first ramp state
        period: Expected cycle length M in steps

    Returns:
        n_offsets trajectories sharing length, dt, loading length and source id
    """
    if n_offsets < 1:
        raise ContractError(f"n_offsets must be at least 1, got {n_offsets}")
    n_loading = trajectory.loading_steps
    cycle_steps = trajectory.n_steps - n_loading - 1
    if period is not None and cycle_steps < period:
        raise DatasetError(
            f"Trajectory {trajectory.id} covers {cycle_steps} steps after loading, shorter than the {period}-step cycle"
        )
    if cycle_steps < max(n_offsets, 1):
        raise DatasetError(f"Trajectory {trajectory.id} is too short for {n_offsets} offsets")
    if p_min is None:
        if n_loading == 0:
            raise ContractError("p_min is required when the trajectory has no loading phase")
        p_min = float(trajectory.states[0, 0, 0])

    source_id = trajectory.source_id or trajectory.id
    cycle = trajectory.states[n_loading:]
    cycle_inflow = trajectory.inlet_flow[n_loading:]

    variants = []
    for i in range(n_offsets):
        shift = i * cycle_steps // n_offsets
        if shift == 0:
            states = trajectory.states.copy()
            inlet_flow = trajectory.inlet_flow.copy()
        else:
            rotated = np.concatenate([cycle[shift:cycle_steps], cycle[: shift + 1]])
            rotated_inflow = np.concatenate([cycle_inflow[shift:cycle_steps], cycle_inflow[: shift + 1]])
            ramp = loading_ramp(rotated[0], p_min, n_loading)
            ramp_inflow = np.arange(n_loading, dtype=float) / max(n_loading, 1) * rotated_inflow[0]
            states = np.concatenate([ramp, rotated])
            inlet_flow = np.concatenate([ramp_inflow, rotated_inflow])
        variants.append(
            Trajectory(
                states=states,
                dt=trajectory.dt,
                inlet_flow=inlet_flow,
                loading_steps=n_loading,
                graph_ref=trajectory.graph_ref,
                id=f"{source_id}_o{i}",
                source_id=source_id,
                meta={**trajectory.meta, "offset": shift},
            )
        )
    logger.debug(f"Augmented {source_id} into {n_offsets} offsets of a {cycle_steps}-step cycle")
    return variants
