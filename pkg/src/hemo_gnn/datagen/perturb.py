"""Random scaling of the inlet waveform and of each outlet's boundary-condition group."""

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from hemo_gnn.datagen.templates import InflowSpec
from hemo_gnn.errors import ContractError
from hemo_gnn.hemo1d.boundary import RcrParams

logger = logging.getLogger(__name__)

INFLOW_FACTOR = "inflow"


def outlet_factor_key(segment: int) -> str:
    return f"outlet_{segment}"


@dataclass
class PerturbedBcs:
    """Scaled inflow and outlet conditions with the factors that produced them."""

    inflow: InflowSpec
    bcs: Dict[int, RcrParams]
    factors: Dict[str, float]


def perturb_bcs(
    inflow: InflowSpec,
    bcs: Mapping[int, RcrParams],
    rng: Optional[np.random.Generator] = None,
    low: float = 0.8,
    high: float = 1.2,
    factors: Optional[Mapping[str, float]] = None,
) -> PerturbedBcs:
    """Multiply the inflow and every outlet group by independent factors drawn from U(low, high).

    Args:
        inflow: Base inlet waveform
        bcs: Base outlet conditions keyed by outlet segment
        rng: Random generator for the factors
        low, high: Factor range
        factors: Fixed factors keyed by "inflow" and "outlet_<segment>"; replaces sampling

    Returns:
        PerturbedBcs holding the factors as recorded in the dataset manifest
    """
    if low <= 0 or high < low:
        raise ContractError(f"Invalid perturbation range [{low}, {high}]")
    keys = [INFLOW_FACTOR] + [outlet_factor_key(s) for s in sorted(bcs)]
    if factors is None:
        if rng is None:
            raise ContractError("Sampling perturbation factors needs a random generator")
        drawn = rng.uniform(low, high, size=len(keys))
        factors = {key: float(value) for key, value in zip(keys, drawn)}
    else:
        missing = set(keys) - set(factors)
        if missing:
            raise ContractError(f"Missing perturbation factors: {sorted(missing)}")
        factors = {key: float(factors[key]) for key in keys}

    return PerturbedBcs(
        inflow=inflow.scaled(factors[INFLOW_FACTOR]),
        bcs={s: bc.scaled(factors[outlet_factor_key(s)]) for s, bc in bcs.items()},
        factors=factors,
    )
