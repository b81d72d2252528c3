"""Tests for the graph network: tensors, forward pieces, rollout and checkpoints."""

import json
import logging

import numpy as np
import pytest

from hemo_gnn.config.settings import ModelConfig, TrainConfig
from hemo_gnn.errors import CheckpointError, ContractError, DatasetError, NormalizationError
from hemo_gnn.graph.centerline import add_boundary_edges, build_graph
from hemo_gnn.graph.normalization import fit_normalization
from hemo_gnn.graph.state import NodeState, Trajectory
from hemo_gnn.mgn.checkpoint import load_checkpoint, save_checkpoint
from hemo_gnn.mgn.model import GnnModel, decode, encode, gnn_step, process_step, rollout
from hemo_gnn.mgn.tensors import GraphTensors, concatenate
from hemo_gnn.nn.gradcheck import check_gradients
from hemo_gnn.nn.optim import AdamState
from hemo_gnn.training.loss import LossSample, batch_loss

SMALL = dict(latent_size=4, hidden_layers=1, hidden_width=8, processing_iterations=2)


def _trajectory(graph, n_steps=5, seed=0):
    rng = np.random.default_rng(seed)
    states = np.empty((n_steps, graph.n_nodes, 2))
    states[:, :, 0] = 100.0 + rng.normal(scale=5.0, size=(n_steps, graph.n_nodes))
    states[:, :, 1] = 5.0 + rng.normal(scale=0.5, size=(n_steps, graph.n_nodes))
    return Trajectory(states=states, dt=0.1, inlet_flow=states[:, graph.inlet, 1], loading_steps=1,
                      graph_ref=graph.id, id=f"{graph.id}_t{seed}")


def _model(graph, **overrides):
    graph = add_boundary_edges(graph)
    stats = fit_normalization([(graph, _trajectory(graph))])
    return GnnModel(ModelConfig(**{**SMALL, **overrides}), stats), graph


def _initial(graph):
    return NodeState(pressure=np.full(graph.n_nodes, 100.0), flow=np.full(graph.n_nodes, 5.0), loading=True)


class TestGraphTensors:
    """Tests for static graph arrays and batching."""

    def test_concatenate_offsets_nodes(self, line_graph, y_graph):
        a = GraphTensors.from_graph(line_graph)
        b = GraphTensors.from_graph(y_graph)
        both = concatenate([a, b])
        assert both.n_nodes == 12
        assert both.n_graphs == 2
        assert both.inlets.tolist() == [0, 5]
        assert both.senders[a.n_edges:].min() >= 5
        assert both.node_graph.tolist() == [0] * 5 + [1] * 7

    def test_boundary_edges_follow_config(self, y_graph):
        with_edges = GraphTensors.from_graph(y_graph, boundary_edges=True)
        without = GraphTensors.from_graph(add_boundary_edges(y_graph), boundary_edges=False)
        assert with_edges.inlet_edges.any()
        assert not without.inlet_edges.any() and not without.outlet_edges.any()

    def test_static_nodes_leave_state_channels_empty(self, y_graph):
        tensors = GraphTensors.from_graph(y_graph)
        assert np.all(tensors.static_nodes[:, [0, 1, 16]] == 0.0)

    def test_empty_batch(self):
        with pytest.raises(ContractError):
            concatenate([])


class TestGnnModel:
    """Tests for parameter layout and the forward pieces."""

    def test_parameter_networks(self, y_graph):
        model, _ = _model(y_graph)
        names = sorted(model.params)
        assert names == sorted(
            ["node_encoder", "edge_encoder", "decoder", "edge_processor_1", "node_processor_1",
             "edge_processor_2", "node_processor_2"]
        )
        assert model.params["node_encoder"].input_dim == 17
        assert model.params["edge_processor_1"].input_dim == 12
        assert model.params["node_processor_1"].input_dim == 16
        assert not model.params["decoder"].final_layer_norm

    def test_no_tau_variant_drops_channels(self, y_graph):
        baseline, graph = _model(y_graph)
        model = GnnModel(ModelConfig(**SMALL).for_variant("no_tau"), baseline.stats)
        # p, q and the node-type one-hot remain; edges keep direction and length
        assert model.params["node_encoder"].input_dim == 6
        assert model.params["edge_encoder"].input_dim == 4
        assert rollout(model, graph, _initial(graph), [5.0], 1).n_steps == 2

    def test_no_rcr_variant(self):
        config = ModelConfig(**SMALL).for_variant("no_rcr")
        assert 13 not in config.active_node_channels
        assert 0 in config.active_node_channels and 1 in config.active_node_channels

    def test_missing_stats(self, y_graph):
        model = GnnModel(ModelConfig(**SMALL))
        with pytest.raises(NormalizationError):
            encode(model, add_boundary_edges(y_graph), _initial(y_graph))

    def test_iterations_in_order(self, y_graph):
        model, graph = _model(y_graph)
        latents = encode(model, graph, _initial(graph))
        assert latents.v.shape == (graph.n_nodes, 4)
        assert latents.w.shape == (graph.n_edges, 4)
        with pytest.raises(ContractError):
            process_step(model, graph, latents, 2)
        with pytest.raises(ContractError):
            decode(model, latents)
        latents = process_step(model, graph, process_step(model, graph, latents, 1), 2)
        assert decode(model, latents).shape == (graph.n_nodes, 2)

    def test_step_prescribes_inlet_flow(self, y_graph):
        model, graph = _model(y_graph)
        state = gnn_step(model, graph, _initial(graph), next_inlet_flow=7.25)
        assert state.flow[graph.inlet] == 7.25
        assert state.time_index == 1
        assert np.all(np.isfinite(state.pressure))

    def test_step_is_permutation_equivariant(self, y_graph):
        model, graph = _model(y_graph, boundary_edges=False)
        # swap the two daughter branches: new node i is old node order[i]
        order = np.array([0, 1, 2, 5, 6, 3, 4])
        new_index = np.argsort(order)
        swapped = build_graph(
            graph.node_positions[order],
            [(int(new_index[a]), int(new_index[b])) for a, b in [(0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (5, 6)]],
            graph.node_type[order],
            graph.area[order],
            {"T_cc": graph.T_cc, "p_min": graph.p_min, "p_max": graph.p_max},
            {int(new_index[node]): bc for node, bc in graph.outlet_bcs.items()},
            id="y_swapped",
        )
        state = NodeState(pressure=100.0 + np.arange(7.0), flow=5.0 + 0.1 * np.arange(7.0), loading=True)
        swapped_state = NodeState(pressure=state.pressure[order], flow=state.flow[order], loading=True)

        expected = gnn_step(model, graph, state, next_inlet_flow=6.0)
        actual = gnn_step(model, swapped, swapped_state, next_inlet_flow=6.0)
        assert np.allclose(actual.pressure, expected.pressure[order], rtol=1e-12, atol=1e-9)
        assert np.allclose(actual.flow, expected.flow[order], rtol=1e-12, atol=1e-9)

    def test_batched_step_matches_single_graphs(self, line_graph, y_graph):
        model, y = _model(y_graph)
        line = add_boundary_edges(line_graph)
        parts = [model.tensors(line), model.tensors(y)]
        inputs = [(np.full(g.n_nodes, 100.0), np.full(g.n_nodes, 5.0), np.zeros(g.n_nodes)) for g in (line, y)]
        single = [model.forward_step(t, p, q, l, np.array([6.0]))[:2] for t, (p, q, l) in zip(parts, inputs)]
        p, q, l = (np.concatenate(arrays) for arrays in zip(*inputs))
        p_batch, q_batch, _ = model.forward_step(concatenate(parts), p, q, l, np.array([6.0, 6.0]))
        assert np.allclose(p_batch, np.concatenate([s[0] for s in single]))
        assert np.allclose(q_batch, np.concatenate([s[1] for s in single]))


class TestRollout:
    """Tests for autoregressive rollouts."""

    def test_rollout_invariants(self, line_graph):
        model, graph = _model(line_graph)
        initial = _initial(graph)
        inlet = np.linspace(5.0, 6.0, 6)
        schedule = [True, False, False, False, False, False]
        trajectory = rollout(model, graph, initial, inlet, 6, loading_schedule=schedule)
        assert trajectory.n_steps == 7
        assert np.array_equal(trajectory.states[0, :, 0], initial.pressure)
        assert np.array_equal(trajectory.flow[1:, graph.inlet], inlet)
        assert trajectory.loading_steps == 2
        assert trajectory.dt == 0.1

    def test_rollout_matches_repeated_steps(self, y_graph):
        model, graph = _model(y_graph)
        state = _initial(graph)
        trajectory = rollout(model, graph, state, [5.5, 6.0], 2)
        for k, q_in in enumerate([5.5, 6.0], start=1):
            state = gnn_step(model, graph, state, q_in)
            assert np.allclose(trajectory.states[k, :, 0], state.pressure)

    def test_graph_without_dt_uses_unit_step(self, y_graph, caplog):
        model, graph = _model(y_graph)
        assert graph.dt is None
        with caplog.at_level(logging.WARNING, logger="hemo_gnn.mgn.model"):
            assert rollout(model, graph, _initial(graph), [5.0], 1).dt == 1.0
        assert "stores no time step" in caplog.text

    def test_graph_dt_carried_to_trajectory(self, y_graph, caplog):
        model, graph = _model(y_graph)
        with caplog.at_level(logging.WARNING, logger="hemo_gnn.mgn.model"):
            assert rollout(model, graph.replace(dt=0.01), _initial(graph), [5.0], 1).dt == 0.01
        assert "stores no time step" not in caplog.text

    def test_zero_graph_dt_rejected(self, y_graph):
        model, graph = _model(y_graph)
        with pytest.raises(DatasetError, match="dt must be positive"):
            rollout(model, graph.replace(dt=0.0), _initial(graph), [5.0], 1)

    def test_short_inlet_series(self, y_graph):
        model, graph = _model(y_graph)
        with pytest.raises(ContractError):
            rollout(model, graph, _initial(graph), [5.0], 3)

    def test_zero_steps(self, y_graph):
        model, graph = _model(y_graph)
        assert rollout(model, graph, _initial(graph), [], 0).n_steps == 1


class TestBackward:
    """Tests for hand-written gradients through multi-step losses."""

    @pytest.mark.parametrize("boundary_edges", [True, False])
    def test_loss_gradients_match_finite_differences(self, y_graph, boundary_edges):
        model, graph = _model(y_graph, boundary_edges=boundary_edges)
        trajectory = _trajectory(graph, n_steps=5, seed=1)
        sample = LossSample(model.tensors(graph), trajectory, k=1)
        config = TrainConfig(stride=2, noise_std=0.0)

        def loss() -> float:
            return batch_loss(model, [sample], config, with_grad=False)[0]

        _, grads = batch_loss(model, [sample], config)
        names = ["decoder", "node_processor_2", "edge_processor_1", "node_encoder", "edge_encoder"]
        arrays = [model.params[name].weights[0] for name in names] + [model.params["decoder"].biases[-1]]
        analytic = [grads[name].weights[0] for name in names] + [grads["decoder"].biases[-1]]
        report = check_gradients(loss, arrays, analytic, names=names + ["decoder.b"], tolerance=1e-4)
        assert report.passed, report.errors


class TestCheckpoint:
    """Tests for checkpoint files."""

    def test_checkpoint_restores_rollout(self, tmp_path, y_graph):
        model, graph = _model(y_graph)
        adam = AdamState.zeros_like(model.params)
        path = save_checkpoint(tmp_path / "m.ckpt", model, adam, TrainConfig(), {"fold": 0, "test_ids": ["a"]})
        checkpoint = load_checkpoint(path)
        assert checkpoint.meta["test_ids"] == ["a"]
        assert checkpoint.training == TrainConfig()
        assert checkpoint.config_hash == json.loads(path.read_text())["config_hash"]
        before = rollout(model, graph, _initial(graph), [5.0, 5.5], 2)
        after = rollout(checkpoint.model, graph, _initial(graph), [5.0, 5.5], 2)
        assert np.array_equal(before.states, after.states)

    def test_tampered_config_rejected(self, tmp_path, y_graph):
        model, _ = _model(y_graph)
        path = save_checkpoint(tmp_path / "m.ckpt", model)
        payload = json.loads(path.read_text())
        payload["model"]["config"]["leaky_slope"] = 0.2
        path.write_text(json.dumps(payload))
        with pytest.raises(CheckpointError, match="hash"):
            load_checkpoint(path)

    def test_expected_config_mismatch(self, tmp_path, y_graph):
        model, _ = _model(y_graph)
        path = save_checkpoint(tmp_path / "m.ckpt", model)
        with pytest.raises(CheckpointError, match="different model configuration"):
            load_checkpoint(path, expected_config=ModelConfig(**SMALL).for_variant("no_tau"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(tmp_path / "nope.ckpt")

    def test_not_json(self, tmp_path):
        path = tmp_path / "m.ckpt"
        path.write_text("garbage")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
