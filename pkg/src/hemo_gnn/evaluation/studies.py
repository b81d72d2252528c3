"""Cross-validated training runs: ablation variants and dataset-size convergence."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from hemo_gnn.config.settings import ModelConfig, TrainConfig
from hemo_gnn.datagen.dataset import Dataset
from hemo_gnn.errors import ContractError
from hemo_gnn.evaluation.metrics import ErrorReport, confidence_interval, evaluate_model
from hemo_gnn.mgn.checkpoint import save_checkpoint
from hemo_gnn.training.folds import Fold, kfold_split
from hemo_gnn.training.trainer import TrainResult, train
from hemo_gnn.utils.constants import ABLATION_VARIANTS

logger = logging.getLogger(__name__)


def checkpoint_meta(result: TrainResult, fold_index: Optional[int], k: Optional[int], seed: int) -> Dict[str, Any]:
    return {
        "fold": fold_index,
        "k": k,
        "split_seed": seed,
        "train_ids": result.train_ids,
        "test_ids": result.test_ids,
        "final_train_loss": result.history.train_losses[-1] if result.history.rows else None,
    }


def save_run(result: TrainResult, out_dir: Path, name: str, meta: Dict[str, Any]) -> Path:
    """Write <name>.ckpt and <name>_history.csv."""
    out_dir = Path(out_dir)
    result.history.to_csv(out_dir / f"{name}_history.csv")
    return save_checkpoint(out_dir / f"{name}.ckpt", result.model, result.adam, result.config, meta)


def cross_validate(
    dataset: Dataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    k: Optional[int] = None,
    seed: int = 0,
    out_dir: Optional[Path] = None,
    workers: Optional[int] = None,
) -> ErrorReport:
    """Train one model per fold and collect test rollout errors."""
    k = k or train_config.k_folds
    plan = kfold_split(dataset.ids, k, seed=seed, sources=dataset.sources)
    report = ErrorReport()
    for index, fold in enumerate(plan.folds):
        run = f"{model_config.variant}_fold{index}"
        result = train(dataset, train_config, fold, model_config, out_dir=out_dir, run_name=run)
        if out_dir is not None:
            save_run(result, out_dir, run, checkpoint_meta(result, index, k, seed))
        rows = evaluate_model(result.model, dataset.pairs(fold.test), fold=index, workers=workers)
        report.extend(rows)
        fold_report = ErrorReport(rows)
        logger.info(
            f"{run}: e_p={fold_report.interval('e_p').mean:.3e}, e_q={fold_report.interval('e_q').mean:.3e}"
        )
    return report


def ablation_run(
    dataset: Dataset,
    variant: str,
    model_config: Optional[ModelConfig] = None,
    train_config: Optional[TrainConfig] = None,
    k: Optional[int] = None,
    seed: int = 0,
    out_dir: Optional[Path] = None,
) -> ErrorReport:
    """Cross-validate one ablation variant: baseline, no_tau, no_boundary_edges or no_rcr."""
    if variant not in ABLATION_VARIANTS:
        raise ContractError(f"Unknown variant '{variant}'. Available: {', '.join(ABLATION_VARIANTS)}")
    config = (model_config or ModelConfig()).for_variant(variant)
    return cross_validate(dataset, config, train_config or TrainConfig(), k=k, seed=seed, out_dir=out_dir)


@dataclass
class SizeStudyRow:
    size: int
    repeat: int
    train_loss: float
    test_loss: float
    train_e_p: float
    train_e_q: float
    test_e_p: float
    test_e_q: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class SizeStudyResult:
    rows: List[SizeStudyRow] = field(default_factory=list)
    confidence: float = 0.95

    @property
    def sizes(self) -> List[int]:
        return sorted({r.size for r in self.rows})

    def summary(self) -> Dict[int, Dict[str, Any]]:
        """Per training-set size: intervals over repeats of every recorded quantity."""
        out = {}
        for size in self.sizes:
            rows = [r for r in self.rows if r.size == size]
            out[size] = {
                name: confidence_interval([getattr(r, name) for r in rows], self.confidence).to_dict()
                for name in ("train_loss", "test_loss", "train_e_p", "train_e_q", "test_e_p", "test_e_q")
            }
        return out


def dataset_size_study(
    dataset: Dataset,
    sizes: Sequence[int],
    repeats: int = 3,
    model_config: Optional[ModelConfig] = None,
    train_config: Optional[TrainConfig] = None,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> SizeStudyResult:
    """Train on nested subsets of source trajectories and score a fixed held-out set.

    Every repeat shuffles the sources, holds out the last test_fraction of them
    and trains on the first n remaining sources for every n in sizes. Augmented
    variants follow their source.
    """
    model_config = model_config or ModelConfig()
    train_config = train_config or TrainConfig()
    sources = sorted(set(dataset.sources))
    n_test = max(1, int(round(test_fraction * len(sources))))
    pool = len(sources) - n_test
    sizes = sorted(sizes)
    if not sizes or sizes[0] < 1 or sizes[-1] > pool:
        raise ContractError(f"Training sizes must lie in [1, {pool}] with {n_test} sources held out")

    result = SizeStudyResult()
    for repeat in range(repeats):
        order = np.random.default_rng([seed, repeat]).permutation(len(sources))
        test_sources = [sources[i] for i in order[pool:]]
        test_ids = dataset.source_subset(test_sources).ids
        for size in sizes:
            train_ids = dataset.source_subset([sources[i] for i in order[:size]]).ids
            config = train_config.model_copy(update={"seed": train_config.seed + repeat})
            trained = train(dataset, config, Fold(train=train_ids, test=test_ids), model_config)
            train_report = ErrorReport(evaluate_model(trained.model, dataset.pairs(train_ids)))
            test_report = ErrorReport(evaluate_model(trained.model, dataset.pairs(test_ids)))
            result.rows.append(
                SizeStudyRow(
                    size=size,
                    repeat=repeat,
                    train_loss=trained.history.train_losses[-1],
                    test_loss=trained.history.test_losses[-1],
                    train_e_p=train_report.interval("e_p").mean,
                    train_e_q=train_report.interval("e_q").mean,
                    test_e_p=test_report.interval("e_p").mean,
                    test_e_q=test_report.interval("e_q").mean,
                )
            )
            logger.info(f"Size {size}, repeat {repeat}: test e_p={result.rows[-1].test_e_p:.3e}")
    return result
