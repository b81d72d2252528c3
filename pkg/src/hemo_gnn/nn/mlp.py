"""Fully connected networks with LeakyReLU hidden layers and optional output layer normalization.

Inputs are batched along the first axis: x has shape (M, input_dim). A 1D
input is treated as a batch of one and the output is squeezed back.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from hemo_gnn.errors import ContractError, NumericalError

LAYER_NORM_VARIANCE_FLOOR = 1e-12


@dataclass
class MlpParams:
    """Weights (input_dim, output_dim) and biases of each affine layer, plus layer-norm gain and offset."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    gain: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    leaky_slope: float = 0.01
    version: int = field(default=0, compare=False)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ContractError("An MLP needs matching, non-empty weight and bias lists")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ContractError(f"Layer {k} has weight {W.shape} and bias {b.shape}")
            if k > 0 and W.shape[0] != self.weights[k - 1].shape[1]:
                raise ContractError(f"Layer {k} input width {W.shape[0]} does not match the previous layer")
        if (self.gain is None) != (self.offset is None):
            raise ContractError("Layer norm needs both gain and offset")
        if self.gain is not None:
            if self.gain.shape != (self.output_dim,) or self.offset.shape != (self.output_dim,):
                raise ContractError("Layer-norm gain and offset must match the output width")
            if not np.all(np.isfinite(self.gain)):
                raise NumericalError("Layer-norm gain must be finite")

    @property
    def final_layer_norm(self) -> bool:
        return self.gain is not None

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def arrays(self) -> List[np.ndarray]:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..., gain, offset."""
        result = []
        for W, b in zip(self.weights, self.biases):
            result.extend([W, b])
        if self.final_layer_norm:
            result.extend([self.gain, self.offset])
        return result

    def names(self) -> List[str]:
        result = []
        for k in range(self.n_layers):
            result.extend([f"W{k}", f"b{k}"])
        if self.final_layer_norm:
            result.extend(["gain", "offset"])
        return result

    def bump(self) -> None:
        """Mark the parameters as modified; forward caches from older versions become stale."""
        self.version += 1

    def zeros_like(self) -> "MlpParams":
        return MlpParams(
            weights=[np.zeros_like(W) for W in self.weights],
            biases=[np.zeros_like(b) for b in self.biases],
            gain=None if self.gain is None else np.zeros_like(self.gain),
            offset=None if self.offset is None else np.zeros_like(self.offset),
            leaky_slope=self.leaky_slope,
        )

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[W.copy() for W in self.weights],
            biases=[b.copy() for b in self.biases],
            gain=None if self.gain is None else self.gain.copy(),
            offset=None if self.offset is None else self.offset.copy(),
            leaky_slope=self.leaky_slope,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "gain": None if self.gain is None else self.gain.tolist(),
            "offset": None if self.offset is None else self.offset.tolist(),
            "leaky_slope": self.leaky_slope,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MlpParams":
        return cls(
            weights=[np.array(W, dtype=float).reshape(len(W), -1) for W in data["weights"]],
            biases=[np.array(b, dtype=float) for b in data["biases"]],
            gain=None if data.get("gain") is None else np.array(data["gain"], dtype=float),
            offset=None if data.get("offset") is None else np.array(data["offset"], dtype=float),
            leaky_slope=data.get("leaky_slope", 0.01),
        )


def init_mlp(
    input_dim: int,
    output_dim: int,
    hidden_layers: int = 2,
    hidden_width: int = 64,
    final_layer_norm: bool = True,
    rng: Optional[np.random.Generator] = None,
    leaky_slope: float = 0.01,
) -> MlpParams:
    """Glorot-uniform weights, zero biases, unit gain and zero offset."""
    rng = rng if rng is not None else np.random.default_rng(0)
    widths = [input_dim] + [hidden_width] * hidden_layers + [output_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(
        weights=weights,
        biases=biases,
        gain=np.ones(output_dim) if final_layer_norm else None,
        offset=np.zeros(output_dim) if final_layer_norm else None,
        leaky_slope=leaky_slope,
    )


@dataclass
class MlpCache:
    """Intermediates of one forward pass."""

    params_id: int
    version: int
    squeeze: bool
    inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    normalized: Optional[np.ndarray] = None
    inv_std: Optional[np.ndarray] = None
    clamped: Optional[np.ndarray] = None


def leaky_relu(z: np.ndarray, slope: float = 0.01) -> np.ndarray:
    return np.where(z > 0, z, slope * z)


def mlp_forward(params: MlpParams, x: np.ndarray):
    """Apply the network; returns (y, cache)."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    if a.ndim != 2 or a.shape[1] != params.input_dim:
        raise ContractError(f"Expected input width {params.input_dim}, got shape {x.shape}")

    inputs, pre = [], []
    for k, (W, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ W + b
        pre.append(z)
        a = leaky_relu(z, params.leaky_slope) if k < params.n_layers - 1 else z

    cache = MlpCache(id(params), params.version, squeeze, inputs, pre)
    if params.final_layer_norm:
        mean = a.mean(axis=1, keepdims=True)
        var = a.var(axis=1, keepdims=True)
        clamped = var < LAYER_NORM_VARIANCE_FLOOR
        inv_std = 1.0 / np.sqrt(np.maximum(var, LAYER_NORM_VARIANCE_FLOOR))
        normalized = (a - mean) * inv_std
        cache.normalized, cache.inv_std, cache.clamped = normalized, inv_std, clamped
        a = normalized * params.gain + params.offset

    if not np.all(np.isfinite(a)):
        raise NumericalError("MLP produced a non-finite output")
    return (a[0] if squeeze else a), cache


def mlp_backward(params: MlpParams, cache: MlpCache, dy: np.ndarray):
    """Reverse-mode gradients; returns (dx, grads) with grads shaped like params."""
    if cache.params_id != id(params) or cache.version != params.version:
        raise ContractError("Forward cache is stale: parameters changed since the forward pass")
    dy = np.asarray(dy, dtype=float)
    da = dy[None, :] if cache.squeeze else dy
    grads = params.zeros_like()

    if params.final_layer_norm:
        grads.gain = (da * cache.normalized).sum(axis=0)
        grads.offset = da.sum(axis=0)
        dn = da * params.gain
        centred = dn - dn.mean(axis=1, keepdims=True)
        projection = cache.normalized * (dn * cache.normalized).mean(axis=1, keepdims=True)
        # clamped rows use a constant std, so only the mean is differentiated
        da = cache.inv_std * np.where(cache.clamped, centred, centred - projection)

    for k in reversed(range(params.n_layers)):
        if k < params.n_layers - 1:
            da = da * np.where(cache.pre_activations[k] > 0, 1.0, params.leaky_slope)
        grads.weights[k] = cache.inputs[k].T @ da
        grads.biases[k] = da.sum(axis=0)
        da = da @ params.weights[k].T

    return (da[0] if cache.squeeze else da), grads
