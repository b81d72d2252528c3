"""Tests for the numpy MLP, gradient checking and the optimizer."""

import numpy as np
import pytest

from hemo_gnn.errors import ContractError, NumericalError
from hemo_gnn.nn.gradcheck import grad_check, numerical_gradient, relative_error
from hemo_gnn.nn.mlp import MlpParams, init_mlp, mlp_backward, mlp_forward
from hemo_gnn.nn.optim import AdamState, adam_step, cosine_lr


class TestMlp:
    """Tests for mlp_forward and mlp_backward."""

    def test_output_shape_and_layer_norm(self):
        params = init_mlp(5, 6, hidden_layers=2, hidden_width=16, rng=np.random.default_rng(1))
        y, _ = mlp_forward(params, np.random.default_rng(2).normal(size=(7, 5)))
        assert y.shape == (7, 6)
        assert np.allclose(y.mean(axis=1), 0.0, atol=1e-12)
        assert np.allclose(y.std(axis=1), 1.0, atol=1e-5)

    def test_single_vector_input(self):
        params = init_mlp(3, 2, final_layer_norm=False, rng=np.random.default_rng(0))
        y, _ = mlp_forward(params, np.ones(3))
        assert y.shape == (2,)

    def test_wrong_input_width(self):
        params = init_mlp(3, 2)
        with pytest.raises(ContractError):
            mlp_forward(params, np.ones((4, 5)))

    def test_non_finite_output(self):
        params = init_mlp(2, 2, final_layer_norm=False)
        with pytest.raises(NumericalError):
            mlp_forward(params, np.array([np.inf, 1.0]))

    def test_stale_cache_rejected(self):
        params = init_mlp(3, 2)
        y, cache = mlp_forward(params, np.ones((2, 3)))
        params.bump()
        with pytest.raises(ContractError, match="stale"):
            mlp_backward(params, cache, np.ones_like(y))

    def test_serialization(self):
        params = init_mlp(4, 3, hidden_layers=1, hidden_width=5, rng=np.random.default_rng(4))
        restored = MlpParams.from_dict(params.to_dict())
        x = np.random.default_rng(5).normal(size=(3, 4))
        assert np.array_equal(mlp_forward(restored, x)[0], mlp_forward(params, x)[0])

    @pytest.mark.parametrize("final_layer_norm", [True, False])
    def test_gradients_match_finite_differences(self, final_layer_norm):
        rng = np.random.default_rng(11)
        params = init_mlp(4, 3, hidden_layers=2, hidden_width=6, final_layer_norm=final_layer_norm, rng=rng)
        report = grad_check(params, rng.normal(size=(5, 4)), tolerance=1e-5)
        assert report.passed, report.errors
        assert "x" in report.errors

    def test_zero_hidden_layers(self):
        rng = np.random.default_rng(12)
        params = init_mlp(3, 4, hidden_layers=0, rng=rng)
        assert params.n_layers == 1
        assert grad_check(params, rng.normal(size=(4, 3))).passed


class TestGradCheck:
    """Tests for the finite-difference helpers."""

    def test_numerical_gradient_of_quadratic(self):
        x = np.array([1.0, -2.0, 3.0])
        grad = numerical_gradient(lambda: float(np.sum(x ** 2)), x)
        assert np.allclose(grad, 2 * x, atol=1e-6)
        assert x.tolist() == [1.0, -2.0, 3.0]

    def test_relative_error(self):
        assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
        assert relative_error(np.ones(3), -np.ones(3)) == pytest.approx(1.0)


class TestAdam:
    """Tests for adam_step and cosine_lr."""

    def test_first_step_moves_by_lr(self):
        params = [np.array([1.0, -1.0])]
        grads = [np.array([0.5, -3.0])]
        state = AdamState.zeros_like(params)
        adam_step(params, grads, state, lr=0.1)
        # bias correction makes the first step lr * sign(g)
        assert np.allclose(params[0], [0.9, -0.9], atol=1e-6)
        assert state.t == 1

    def test_minimizes_quadratic(self):
        params = [np.array([3.0, -4.0])]
        state = AdamState.zeros_like(params)
        for _ in range(3000):
            adam_step(params, [2 * params[0]], state, lr=0.01)
        assert np.allclose(params[0], 0.0, atol=5e-2)

    def test_non_finite_gradient(self):
        params = [np.zeros(2)]
        with pytest.raises(NumericalError):
            adam_step(params, [np.array([np.nan, 0.0])], AdamState.zeros_like(params), lr=0.1)

    def test_state_serialization(self):
        params = [np.zeros((2, 2))]
        state = AdamState.zeros_like(params)
        adam_step(params, [np.ones((2, 2))], state, lr=0.1)
        restored = AdamState.from_dict(state.to_dict(), params)
        assert restored.t == 1
        assert np.array_equal(restored.m[0], state.m[0])
        assert restored.m[0].shape == (2, 2)

    def test_cosine_schedule_endpoints(self):
        assert cosine_lr(0, 100, 1e-3, 1e-6) == pytest.approx(1e-3)
        assert cosine_lr(100, 100, 1e-3, 1e-6) == pytest.approx(1e-6)
        assert cosine_lr(50, 100, 1e-3, 1e-6) == pytest.approx(0.5 * (1e-3 + 1e-6))

    def test_cosine_schedule_is_monotone(self):
        rates = [cosine_lr(e, 10) for e in range(11)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))

    def test_cosine_epoch_out_of_range(self):
        with pytest.raises(ContractError):
            cosine_lr(11, 10)
