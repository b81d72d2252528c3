"""Feature sensitivity: rollout error under noise on one normalized feature, relative to the clean rollout."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from hemo_gnn.errors import ContractError, NumericalError
from hemo_gnn.evaluation.metrics import rollout_errors
from hemo_gnn.graph.centerline import CenterlineGraph
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.mgn.model import FeaturePerturbation, GnnModel
from hemo_gnn.utils.constants import EDGE_FEATURES, NODE_FEATURES, RCR_NODE_FEATURES, feature_channels

logger = logging.getLogger(__name__)


def _features() -> Dict[str, Tuple[str, List[int]]]:
    features = {name: ("node", feature_channels(NODE_FEATURES, [name])) for name in NODE_FEATURES}
    features["rcr"] = ("node", feature_channels(NODE_FEATURES, RCR_NODE_FEATURES))
    features.update({name: ("edge", feature_channels(EDGE_FEATURES, [name])) for name in EDGE_FEATURES})
    return features


# feature name -> (family, channels)
SENSITIVITY_FEATURES = _features()
DEFAULT_FEATURES = ["p", "q", "A", "phi", "alpha", "T_cc", "p_min", "p_max", "rcr", "l", "d", "z", "beta"]


def feature_perturbation(feature: str, std: float, rng: np.random.Generator) -> FeaturePerturbation:
    """Noise on one feature; multi-channel features get std divided by their width."""
    if feature not in SENSITIVITY_FEATURES:
        raise ContractError(f"Unknown feature '{feature}'. Available: {', '.join(SENSITIVITY_FEATURES)}")
    family, channels = SENSITIVITY_FEATURES[feature]
    return FeaturePerturbation(family=family, channels=channels, std=std / len(channels), rng=rng)


def sensitivity_factor(
    model: GnnModel,
    graph: CenterlineGraph,
    trajectory: Trajectory,
    feature: str,
    rng: np.random.Generator,
    std: float = 0.05,
    baseline: Optional[Tuple[float, float]] = None,
) -> Tuple[float, float]:
    """(perturbed e_p / baseline e_p, perturbed e_q / baseline e_q).

    Raises:
        NumericalError: A baseline error is zero, so the ratio is undefined
    """
    if baseline is None:
        clean = rollout_errors(model, graph, trajectory)
        baseline = (clean.e_p, clean.e_q)
    if baseline[0] == 0 or baseline[1] == 0:
        raise NumericalError(f"Baseline error {baseline} has a zero component; the sensitivity factor is undefined")
    perturbed = rollout_errors(model, graph, trajectory, feature_perturbation(feature, std, rng))
    return perturbed.e_p / baseline[0], perturbed.e_q / baseline[1]


@dataclass
class SensitivityReport:
    """Model-averaged sensitivity factors per feature."""

    factors: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    baselines: List[Tuple[float, float]] = field(default_factory=list)
    noise_std: float = 0.05
    trajectory_id: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trajectory_id": self.trajectory_id,
            "noise_std": self.noise_std,
            "baselines": [{"e_p": p, "e_q": q} for p, q in self.baselines],
            "factors": {name: {"e_p": p, "e_q": q} for name, (p, q) in self.factors.items()},
        }


def sensitivity_analysis(
    models: Sequence[GnnModel],
    graph: CenterlineGraph,
    trajectory: Trajectory,
    features: Optional[Sequence[str]] = None,
    std: float = 0.05,
    seed: int = 0,
) -> SensitivityReport:
    """Sensitivity factors of every feature, averaged over independently trained models."""
    if not models:
        raise ContractError("Sensitivity analysis needs at least one model")
    features = list(features or DEFAULT_FEATURES)
    report = SensitivityReport(noise_std=std, trajectory_id=trajectory.id)
    per_model: Dict[str, List[Tuple[float, float]]] = {name: [] for name in features}
    for m, model in enumerate(models):
        clean = rollout_errors(model, graph, trajectory)
        baseline = (clean.e_p, clean.e_q)
        report.baselines.append(baseline)
        for f, name in enumerate(features):
            rng = np.random.default_rng([seed, m, f])
            per_model[name].append(sensitivity_factor(model, graph, trajectory, name, rng, std, baseline))
        logger.info(
            f"Sensitivity of model {m + 1}/{len(models)}: baseline e_p={baseline[0]:.3e}, e_q={baseline[1]:.3e}"
        )
    for name, values in per_model.items():
        ratios = np.asarray(values)
        report.factors[name] = (float(ratios[:, 0].mean()), float(ratios[:, 1].mean()))
    return report
