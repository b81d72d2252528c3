"""Gaussian perturbation of nodal pressure and flow."""

from typing import Sequence, Tuple

import numpy as np

from hemo_gnn.errors import ContractError
from hemo_gnn.graph.state import NodeState


def perturb_state_arrays(
    pressure: np.ndarray,
    flow: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    scale: Sequence[float] = (1.0, 1.0),
) -> Tuple[np.ndarray, np.ndarray]:
    """Add N(0, sigma^2) noise expressed in units of `scale` to pressure and flow."""
    if sigma < 0:
        raise ContractError(f"Noise standard deviation must be non-negative, got {sigma}")
    if sigma == 0:
        return pressure.copy(), flow.copy()
    p_scale, q_scale = scale
    noisy_p = pressure + sigma * p_scale * rng.standard_normal(pressure.shape)
    noisy_q = flow + sigma * q_scale * rng.standard_normal(flow.shape)
    return noisy_p, noisy_q


def inject_noise(
    state: NodeState,
    sigma: float,
    rng: np.random.Generator,
    scale: Sequence[float] = (1.0, 1.0),
) -> NodeState:
    """Perturb only the pressure and flow of a state.

    With `scale` set to the normalization std of the two channels, sigma is
    measured in normalized units.
    """
    pressure, flow = perturb_state_arrays(state.pressure, state.flow, sigma, rng, scale)
    return state.replace(pressure=pressure, flow=flow)
