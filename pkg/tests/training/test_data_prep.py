"""Tests for fold plans, offset augmentation and state noise."""

import numpy as np
import pytest

from hemo_gnn.errors import ContractError, DatasetError
from hemo_gnn.graph.state import NodeState, Trajectory
from hemo_gnn.training.augment import augment_offsets
from hemo_gnn.training.folds import FoldPlan, kfold_split
from hemo_gnn.training.noise import inject_noise, perturb_state_arrays


def _cycle_trajectory(n_loading=2, cycle_steps=8, n_nodes=3):
    """Loading ramp followed by a periodic cycle whose state k holds k in every channel."""
    cycle = np.arange(cycle_steps + 1, dtype=float) % cycle_steps
    states = np.zeros((n_loading + cycle_steps + 1, n_nodes, 2))
    states[:n_loading, :, 0] = 50.0
    states[n_loading:, :, 0] = 100.0 + cycle[:, None]
    states[n_loading:, :, 1] = 1.0 + cycle[:, None]
    inlet = states[:, 0, 1].copy()
    return Trajectory(states=states, dt=0.1, inlet_flow=inlet, loading_steps=n_loading, graph_ref="g",
                      id="src", source_id="src")


class TestFolds:
    """Tests for kfold_split."""

    def test_test_sets_partition_ids(self):
        ids = [f"t{i}" for i in range(10)]
        plan = kfold_split(ids, 3, seed=1)
        tested = sorted(i for fold in plan.folds for i in fold.test)
        assert tested == sorted(ids)
        for fold in plan.folds:
            assert set(fold.train) | set(fold.test) == set(ids)
            assert not set(fold.train) & set(fold.test)

    def test_sources_stay_together(self):
        ids = [f"s{s}_o{o}" for s in range(4) for o in range(3)]
        sources = [f"s{s}" for s in range(4) for _ in range(3)]
        plan = kfold_split(ids, 2, seed=0, sources=sources)
        for fold in plan.folds:
            tested_sources = {i.split("_")[0] for i in fold.test}
            trained_sources = {i.split("_")[0] for i in fold.train}
            assert not tested_sources & trained_sources

    def test_seeded(self):
        ids = [f"t{i}" for i in range(8)]
        assert kfold_split(ids, 4, seed=5).to_dict() == kfold_split(ids, 4, seed=5).to_dict()

    def test_fold_sizes_differ_by_at_most_one(self):
        plan = kfold_split([f"t{i}" for i in range(11)], 3)
        sizes = [len(fold.test) for fold in plan.folds]
        assert max(sizes) - min(sizes) <= 1

    def test_k_too_large(self):
        with pytest.raises(ContractError, match="exceeds"):
            kfold_split(["a", "b"], 3)

    def test_k_too_small(self):
        with pytest.raises(ContractError):
            kfold_split(["a", "b"], 1)

    def test_plan_serialization(self):
        plan = kfold_split(["a", "b", "c", "d"], 2, seed=3)
        restored = FoldPlan.from_dict(plan.to_dict())
        assert restored.folds[1].test == plan.folds[1].test
        assert restored.test_fold_of("a") == plan.test_fold_of("a")


class TestAugmentOffsets:
    """Tests for cycle rotation."""

    def test_variants_share_shape_and_source(self):
        variants = augment_offsets(_cycle_trajectory(), 4)
        assert [v.id for v in variants] == ["src_o0", "src_o1", "src_o2", "src_o3"]
        assert {v.source_id for v in variants} == {"src"}
        assert {v.n_steps for v in variants} == {11}
        assert {v.loading_steps for v in variants} == {2}

    def test_offset_zero_is_the_original(self):
        original = _cycle_trajectory()
        assert np.array_equal(augment_offsets(original, 4)[0].states, original.states)

    def test_rotation(self):
        variants = augment_offsets(_cycle_trajectory(), 4)
        shifted = variants[1]
        assert shifted.meta["offset"] == 2
        # cycle state k holds k, so the rotated cycle starts at 2 and wraps back to 2
        assert shifted.states[2:, 0, 0].tolist() == [102, 103, 104, 105, 106, 107, 100, 101, 102]
        assert shifted.inlet_flow[2:].tolist() == [3, 4, 5, 6, 7, 8, 1, 2, 3]

    def test_ramp_regenerated_from_rest(self):
        shifted = augment_offsets(_cycle_trajectory(), 4, p_min=80.0)[2]
        assert shifted.states[0, 0].tolist() == [80.0, 0.0]
        # halfway up the ramp toward the rotated first state (104, 5)
        assert shifted.states[1, 0].tolist() == [92.0, 2.5]
        assert shifted.inlet_flow[:2].tolist() == [0.0, 2.5]

    def test_too_short(self):
        with pytest.raises(DatasetError):
            augment_offsets(_cycle_trajectory(cycle_steps=2), 4)

    def test_shorter_than_period(self):
        with pytest.raises(DatasetError):
            augment_offsets(_cycle_trajectory(), 2, period=10)

    def test_p_min_required_without_ramp(self):
        with pytest.raises(ContractError):
            augment_offsets(_cycle_trajectory(n_loading=0), 2)


class TestNoise:
    """Tests for pressure and flow noise."""

    def test_zero_sigma_is_identity(self):
        p, q = np.ones(4), np.zeros(4)
        noisy_p, noisy_q = perturb_state_arrays(p, q, 0.0, np.random.default_rng(0))
        assert np.array_equal(noisy_p, p) and np.array_equal(noisy_q, q)
        assert noisy_p is not p

    def test_noise_scale(self):
        rng = np.random.default_rng(0)
        p, q = perturb_state_arrays(np.zeros(20000), np.zeros(20000), 0.1, rng, scale=(10.0, 2.0))
        assert p.std() == pytest.approx(1.0, rel=0.05)
        assert q.std() == pytest.approx(0.2, rel=0.05)

    def test_inject_noise_keeps_flags(self):
        state = NodeState(np.zeros(3), np.zeros(3), loading=True, time_index=4)
        noisy = inject_noise(state, 0.5, np.random.default_rng(1))
        assert noisy.loading and noisy.time_index == 4
        assert not np.array_equal(noisy.pressure, state.pressure)

    def test_negative_sigma(self):
        with pytest.raises(ContractError):
            perturb_state_arrays(np.zeros(2), np.zeros(2), -1.0, np.random.default_rng(0))
