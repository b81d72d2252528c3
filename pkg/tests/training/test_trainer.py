"""Tests for the strided loss and the epoch loop."""

import json

import numpy as np
import pytest

from hemo_gnn.config.settings import TrainConfig
from hemo_gnn.errors import CheckpointError, ContractError, DatasetError
from hemo_gnn.graph.state import NodeState
from hemo_gnn.mgn.checkpoint import load_checkpoint, save_checkpoint
from hemo_gnn.mgn.model import GnnModel, rollout
from hemo_gnn.mgn.tensors import prepare_graph
from hemo_gnn.training.folds import Fold, kfold_split
from hemo_gnn.training.loss import step_weights, strided_loss
from hemo_gnn.training.trainer import batch_iterator, evaluate_loss, train, window_starts


class TestStridedLoss:
    """Tests for strided_loss and its weights."""

    def test_step_weights(self):
        assert step_weights(3, 0.5).tolist() == [1.0, 0.5, 0.5]
        assert step_weights(1, 0.5).tolist() == [1.0]

    def test_loss_is_non_negative(self, tiny_dataset, tiny_model_config):
        trajectory_id = tiny_dataset.ids[0]
        graph = prepare_graph(tiny_dataset.graph_of(trajectory_id), True)
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        loss = strided_loss(model, graph, tiny_dataset.trajectory(trajectory_id), k=0, s=3)
        assert np.isfinite(loss) and loss >= 0.0

    def test_default_noise_needs_no_generator(self, tiny_dataset, tiny_model_config):
        """With the default noise level and no generator the loss equals the clean loss."""
        trajectory_id = tiny_dataset.ids[0]
        graph = prepare_graph(tiny_dataset.graph_of(trajectory_id), True)
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        trajectory = tiny_dataset.trajectory(trajectory_id)
        assert TrainConfig().noise_std > 0
        noisy_default = strided_loss(model, graph, trajectory, k=0, s=2)
        clean = strided_loss(model, graph, trajectory, k=0, s=2, config=TrainConfig(noise_std=0.0))
        assert noisy_default == clean

    def test_own_rollout_scores_zero(self, tiny_dataset, tiny_model_config):
        trajectory_id = tiny_dataset.ids[0]
        graph = prepare_graph(tiny_dataset.graph_of(trajectory_id), True)
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        source = tiny_dataset.trajectory(trajectory_id)
        initial = NodeState(pressure=source.states[0, :, 0], flow=source.states[0, :, 1], loading=False)
        predicted = rollout(model, graph, initial, source.inlet_flow[1:4], 3)
        assert strided_loss(model, graph, predicted, k=0, s=3) == 0.0

    def test_window_past_the_end(self, tiny_dataset, tiny_model_config):
        trajectory = tiny_dataset.trajectory(tiny_dataset.ids[0])
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        with pytest.raises(ContractError, match="Window"):
            strided_loss(model, tiny_dataset.graph_of(trajectory.id), trajectory, k=trajectory.n_steps - 2, s=2)

    def test_noise_needs_rng(self, tiny_dataset, tiny_model_config):
        trajectory = tiny_dataset.trajectory(tiny_dataset.ids[0])
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        with pytest.raises(ContractError, match="random generator"):
            strided_loss(model, tiny_dataset.graph_of(trajectory.id), trajectory, 0,
                         config=TrainConfig(noise_std=0.1, stride=1))


class TestBatching:
    """Tests for window enumeration and shuffled batches."""

    def test_window_starts(self, tiny_dataset):
        trajectory = tiny_dataset.trajectory(tiny_dataset.ids[0])
        starts = window_starts(trajectory, 2)
        assert starts[-1] + 2 == trajectory.n_steps - 1

    def test_batches_cover_every_sample_once(self):
        batches = list(batch_iterator(list(range(23)), 5, seed=3, epoch=1))
        assert [len(b) for b in batches] == [5, 5, 5, 5, 3]
        assert sorted(x for b in batches for x in b) == list(range(23))

    def test_shuffle_is_seeded_per_epoch(self):
        samples = list(range(50))
        first = list(batch_iterator(samples, 50, seed=3, epoch=0))
        assert first == list(batch_iterator(samples, 50, seed=3, epoch=0))
        assert first != list(batch_iterator(samples, 50, seed=3, epoch=1))

    def test_invalid_batch_size(self):
        with pytest.raises(ContractError):
            list(batch_iterator([1, 2], 0))


class TestTrain:
    """Tests for train and evaluate_loss on the generated dataset."""

    def test_history_and_logs(self, tmp_path, tiny_dataset, tiny_model_config, tiny_train_config):
        plan = kfold_split(tiny_dataset.ids, 2, seed=0, sources=tiny_dataset.sources)
        result = train(tiny_dataset, tiny_train_config, plan[0], tiny_model_config, out_dir=tmp_path,
                       run_name="fold0")

        assert len(result.history.rows) == 2
        assert all(np.isfinite(loss) for loss in result.history.train_losses)
        assert all(loss is not None for loss in result.history.test_losses)
        assert result.test_ids == plan[0].test
        assert result.adam.t > 0

        lines = (tmp_path / "logs" / "fold0.log").read_text().splitlines()
        events = [json.loads(line) for line in lines]
        assert [e["epoch"] for e in events] == [0, 1]
        assert all(e["event"] == "epoch" and e["success"] for e in events)

        csv_path = result.history.to_csv(tmp_path / "history.csv")
        assert csv_path.read_text().splitlines()[0] == "epoch,train_loss,test_loss,lr"

    def test_training_is_deterministic(self, tiny_dataset, tiny_model_config, tiny_train_config):
        first = train(tiny_dataset, tiny_train_config, model_config=tiny_model_config)
        second = train(tiny_dataset, tiny_train_config, model_config=tiny_model_config)
        assert first.history.train_losses == second.history.train_losses
        assert first.test_ids == []
        for name in first.model.params:
            assert np.array_equal(first.model.params[name].weights[0], second.model.params[name].weights[0])

    def test_fits_a_single_trajectory(self, tiny_dataset, tiny_model_config):
        single = tiny_dataset.subset(tiny_dataset.ids[:1])
        config = TrainConfig(stride=1, epochs=60, batch_size=16, noise_std=0.0, lr0=1e-2, lr_final=1e-4)
        result = train(single, config, model_config=tiny_model_config)
        untrained = GnnModel(tiny_model_config, result.model.stats)
        before = evaluate_loss(untrained, single, single.ids, config)
        after = evaluate_loss(result.model, single, single.ids, config)
        assert after < before

    def test_empty_training_set(self, tiny_dataset, tiny_model_config, tiny_train_config):
        with pytest.raises(DatasetError, match="empty"):
            train(tiny_dataset, tiny_train_config, Fold(train=[], test=tiny_dataset.ids), tiny_model_config)

    def test_stride_longer_than_trajectories(self, tiny_dataset, tiny_model_config):
        config = TrainConfig(stride=50, epochs=1)
        with pytest.raises(DatasetError, match="long enough"):
            train(tiny_dataset, config, model_config=tiny_model_config)

    def test_trained_checkpoint_reloads_exactly(self, tmp_path, tiny_dataset, tiny_model_config, tiny_train_config):
        """Weights and optimizer moments survive a save and load after real training."""
        result = train(tiny_dataset, tiny_train_config, model_config=tiny_model_config)
        path = save_checkpoint(tmp_path / "model.ckpt", result.model, result.adam, result.config)
        checkpoint = load_checkpoint(path, expected_config=tiny_model_config)

        assert list(checkpoint.model.params) == list(result.model.params)
        for saved, loaded in zip(result.model.params.arrays(), checkpoint.model.params.arrays()):
            assert np.array_equal(saved, loaded)
        assert checkpoint.adam.t == result.adam.t
        for saved, loaded in zip(result.adam.m + result.adam.v, checkpoint.adam.m + checkpoint.adam.v):
            assert np.array_equal(saved, loaded)

    def test_optimizer_state_of_another_shape_rejected(self, tmp_path, tiny_dataset, tiny_model_config,
                                                       tiny_train_config):
        result = train(tiny_dataset, tiny_train_config, model_config=tiny_model_config)
        path = save_checkpoint(tmp_path / "model.ckpt", result.model, result.adam, result.config)
        payload = json.loads(path.read_text())
        payload["adam"]["m"] = payload["adam"]["m"][::-1]
        path.write_text(json.dumps(payload))
        with pytest.raises(CheckpointError, match="optimizer state"):
            load_checkpoint(path)
