"""k-fold cross-validation plans grouped by source simulation."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from hemo_gnn.errors import ContractError

logger = logging.getLogger(__name__)


@dataclass
class Fold:
    train: List[str]
    test: List[str]


@dataclass
class FoldPlan:
    """Train/test trajectory ids per fold; every source lands in exactly one test fold."""

    k: int
    folds: List[Fold] = field(default_factory=list)
    seed: int = 0

    def __getitem__(self, index: int) -> Fold:
        if not 0 <= index < len(self.folds):
            raise ContractError(f"Fold index {index} out of range for k={self.k}")
        return self.folds[index]

    def __len__(self) -> int:
        return len(self.folds)

    def test_fold_of(self, trajectory_id: str) -> int:
        for index, fold in enumerate(self.folds):
            if trajectory_id in fold.test:
                return index
        raise KeyError(trajectory_id)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [{"train": f.train, "test": f.test} for f in self.folds],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FoldPlan":
        return cls(
            k=data["k"],
            seed=data.get("seed", 0),
            folds=[Fold(train=list(f["train"]), test=list(f["test"])) for f in data["folds"]],
        )


def kfold_split(
    ids: Sequence[str],
    k: int,
    seed: int = 0,
    sources: Optional[Sequence[str]] = None,
) -> FoldPlan:
    """Split trajectory ids into k folds, keeping augmented variants with their source.

    Args:
        ids: Trajectory identifiers
        k: Number of folds (at least 2, at most the number of sources)
        seed: Shuffle seed
        sources: Source id of every trajectory; each id is its own source when omitted

    Returns:
        FoldPlan whose test sets partition ids; the last folds may be one source smaller
    """
    ids = list(ids)
    sources = list(ids) if sources is None else list(sources)
    if len(sources) != len(ids):
        raise ContractError("Provide one source id per trajectory id")
    if len(set(ids)) != len(ids):
        raise ContractError("Trajectory ids must be unique")
    if k < 2:
        raise ContractError(f"k-fold cross-validation needs k >= 2, got {k}")

    unique_sources = sorted(set(sources))
    if k > len(unique_sources):
        raise ContractError(f"k={k} exceeds the number of source trajectories ({len(unique_sources)})")

    order = np.random.default_rng(seed).permutation(len(unique_sources))
    groups = np.array_split(order, k)
    fold_of_source = {unique_sources[s]: f for f, group in enumerate(groups) for s in group}

    plan = FoldPlan(k=k, seed=seed)
    for f in range(k):
        test = [i for i, s in zip(ids, sources) if fold_of_source[s] == f]
        train = [i for i, s in zip(ids, sources) if fold_of_source[s] != f]
        plan.folds.append(Fold(train=train, test=test))
    logger.debug(f"Split {len(ids)} trajectories from {len(unique_sources)} sources into {k} folds")
    return plan
