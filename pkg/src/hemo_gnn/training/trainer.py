"""Epoch loop: Adam with a cosine schedule over shuffled batches of strided-loss windows."""

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from hemo_gnn.config.settings import ModelConfig, TrainConfig
from hemo_gnn.datagen.dataset import Dataset
from hemo_gnn.errors import ContractError, DatasetError, NumericalError, TrainingDivergenceError
from hemo_gnn.graph.normalization import fit_normalization
from hemo_gnn.graph.state import Trajectory
from hemo_gnn.mgn.model import GnnModel
from hemo_gnn.mgn.tensors import GraphTensors, prepare_graph
from hemo_gnn.nn.optim import AdamState, adam_step, cosine_lr
from hemo_gnn.training.folds import Fold
from hemo_gnn.training.loss import LossSample, batch_loss
from hemo_gnn.utils.logging import log_run_event

logger = logging.getLogger(__name__)

Sample = TypeVar("Sample")

HISTORY_COLUMNS = ["epoch", "train_loss", "test_loss", "lr"]


@dataclass
class TrainingHistory:
    rows: List[Dict[str, float]] = field(default_factory=list)

    def append(self, epoch: int, train_loss: float, test_loss: Optional[float], lr: float) -> None:
        self.rows.append({"epoch": epoch, "train_loss": train_loss, "test_loss": test_loss, "lr": lr})

    @property
    def train_losses(self) -> List[float]:
        return [row["train_loss"] for row in self.rows]

    @property
    def test_losses(self) -> List[Optional[float]]:
        return [row["test_loss"] for row in self.rows]

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=HISTORY_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: "" if row[k] is None else repr(row[k]) for k in HISTORY_COLUMNS})
        return path


@dataclass
class TrainResult:
    model: GnnModel
    adam: AdamState
    history: TrainingHistory
    config: TrainConfig
    train_ids: List[str]
    test_ids: List[str]


def window_starts(trajectory: Trajectory, stride: int) -> range:
    """Start steps k with k + stride <= n_steps - 1."""
    return range(max(0, trajectory.n_steps - stride))


def batch_iterator(
    samples: Sequence[Sample],
    batch_size: int,
    seed: int = 0,
    epoch: int = 0,
) -> Iterator[List[Sample]]:
    """Seeded per-epoch shuffle of samples cut into batches of at most batch_size."""
    if batch_size < 1:
        raise ContractError(f"batch_size must be at least 1, got {batch_size}")
    order = np.random.default_rng([seed, epoch]).permutation(len(samples))
    for start in range(0, len(order), batch_size):
        yield [samples[i] for i in order[start : start + batch_size]]


class _TensorCache:
    """Graph tensors per graph id, built once for the model's boundary-edge setting."""

    def __init__(self, dataset: Dataset, boundary_edges: bool):
        self.dataset = dataset
        self.boundary_edges = boundary_edges
        self._tensors: Dict[str, GraphTensors] = {}

    def __call__(self, trajectory_id: str) -> GraphTensors:
        ref = self.dataset.trajectory(trajectory_id).graph_ref
        if ref not in self._tensors:
            self._tensors[ref] = GraphTensors.from_graph(self.dataset.graphs[ref], self.boundary_edges)
        return self._tensors[ref]


def _loss_samples(dataset: Dataset, cache: _TensorCache, batch: Sequence[Tuple[str, int]]) -> List[LossSample]:
    return [LossSample(cache(i), dataset.trajectory(i), k) for i, k in batch]


def evaluate_loss(
    model: GnnModel,
    dataset: Dataset,
    ids: Sequence[str],
    config: TrainConfig,
    cache: Optional[_TensorCache] = None,
) -> float:
    """Noise-free strided loss averaged over every window of the given trajectories."""
    cache = cache or _TensorCache(dataset, model.config.boundary_edges)
    clean = config.model_copy(update={"noise_std": 0.0})
    windows = [(i, k) for i in ids for k in window_starts(dataset.trajectory(i), config.stride)]
    if not windows:
        raise DatasetError("No trajectory is long enough for the configured stride")
    total = 0.0
    for start in range(0, len(windows), config.batch_size):
        chunk = windows[start : start + config.batch_size]
        loss, _ = batch_loss(model, _loss_samples(dataset, cache, chunk), clean, with_grad=False)
        total += loss * len(chunk)
    return total / len(windows)


def train(
    dataset: Dataset,
    config: Optional[TrainConfig] = None,
    fold: Optional[Fold] = None,
    model_config: Optional[ModelConfig] = None,
    out_dir: Optional[Path] = None,
    run_name: str = "train",
) -> TrainResult:
    """Fit a GnnModel on the training portion of a fold.

    Normalization statistics are fitted on the training trajectories only,
    on graphs prepared for the model's boundary-edge setting. With out_dir
    set, one JSON-lines event per epoch goes to out_dir/logs/<run_name>.log.

    Raises:
        TrainingDivergenceError: The loss or a gradient became non-finite
    """
    config = config or TrainConfig()
    model_config = model_config or ModelConfig()
    train_ids = list(fold.train) if fold is not None else dataset.ids
    test_ids = list(fold.test) if fold is not None else []
    if not train_ids:
        raise DatasetError("The training set is empty")

    train_set = dataset.subset(train_ids)
    prepared = {ref: prepare_graph(graph, model_config.boundary_edges) for ref, graph in train_set.graphs.items()}
    stats = fit_normalization((prepared[t.graph_ref], t) for _, t in train_set.pairs())
    model = GnnModel(model_config, stats)
    adam = AdamState.zeros_like(model.params)
    cache = _TensorCache(dataset, model_config.boundary_edges)

    samples = [(i, k) for i in train_ids for k in window_starts(dataset.trajectory(i), config.stride)]
    if not samples:
        raise DatasetError("No training trajectory is long enough for the configured stride")
    epochs = config.resolve_epochs(train_set.n_geometries)
    noise_rng = np.random.default_rng([config.seed, 1])
    history = TrainingHistory()
    logger.info(
        f"Training variant '{model_config.variant}' on {len(train_ids)} trajectories "
        f"({len(samples)} windows) for {epochs} epochs"
    )

    for epoch in range(epochs):
        start = time.perf_counter()
        lr = cosine_lr(epoch, epochs, config.lr0, config.lr_final)
        weighted = 0.0
        for b, batch in enumerate(batch_iterator(samples, config.batch_size, config.seed, epoch)):
            loss, grads = batch_loss(model, _loss_samples(dataset, cache, batch), config, rng=noise_rng)
            if not math.isfinite(loss):
                raise TrainingDivergenceError(f"Loss is {loss} at epoch {epoch}, batch {b}", epoch=epoch, batch=b)
            try:
                adam_step(model.params, grads, adam, lr)
            except NumericalError as e:
                raise TrainingDivergenceError(f"{e} at epoch {epoch}, batch {b}", epoch=epoch, batch=b) from e
            weighted += loss * len(batch)
        train_loss = weighted / len(samples)
        test_loss = evaluate_loss(model, dataset, test_ids, config, cache) if test_ids else None
        history.append(epoch, train_loss, test_loss, lr)

        duration_ms = (time.perf_counter() - start) * 1000
        test_text = "" if test_loss is None else f", test {test_loss:.4e}"
        logger.info(f"Epoch {epoch + 1}/{epochs}: train {train_loss:.4e}{test_text}, lr {lr:.2e}")
        if out_dir is not None:
            log_run_event(
                Path(out_dir) / "logs",
                run_name,
                "epoch",
                {"epoch": epoch, "train_loss": train_loss, "test_loss": test_loss, "lr": lr},
                duration_ms=duration_ms,
            )

    return TrainResult(
        model=model,
        adam=adam,
        history=history,
        config=config,
        train_ids=train_ids,
        test_ids=test_ids,
    )
