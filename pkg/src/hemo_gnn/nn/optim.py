"""Adam optimizer and cosine learning-rate schedule."""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from hemo_gnn.errors import ContractError, NumericalError


def _arrays(params) -> List[np.ndarray]:
    return params.arrays() if hasattr(params, "arrays") else list(params)


@dataclass
class AdamState:
    """First and second moments per parameter array and the step counter."""

    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, **kwargs) -> "AdamState":
        arrays = _arrays(params)
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays], **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": [a.tolist() for a in self.m],
            "v": [a.tolist() for a in self.v],
            "t": self.t,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], like: Sequence[np.ndarray]) -> "AdamState":
        """Restore moments; each must have the shape of the matching parameter array."""
        like = list(like)
        moments = {}
        for key in ("m", "v"):
            arrays = [np.array(a, dtype=float) for a in data[key]]
            if len(arrays) != len(like):
                raise ContractError(f"Adam state holds {len(arrays)} '{key}' arrays for {len(like)} parameters")
            for i, (a, p) in enumerate(zip(arrays, like)):
                if a.shape != p.shape:
                    raise ContractError(f"Adam moment {key}[{i}] has shape {a.shape}, parameter has {p.shape}")
            moments[key] = arrays
        return cls(
            m=moments["m"],
            v=moments["v"],
            t=data["t"],
            beta1=data["beta1"],
            beta2=data["beta2"],
            eps=data["eps"],
        )


def adam_step(params, grads, state: AdamState, lr: float):
    """One bias-corrected Adam update, applied in place.

    `params` and `grads` are either objects exposing `arrays()` or plain
    sequences of arrays in matching order. Returns (params, state).
    """
    p_arrays = _arrays(params)
    g_arrays = _arrays(grads)
    if len(p_arrays) != len(g_arrays) or len(p_arrays) != len(state.m):
        raise ContractError("Parameters, gradients and Adam moments must have the same number of arrays")
    for p, g, m in zip(p_arrays, g_arrays, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ContractError(f"Shape mismatch: parameter {p.shape}, gradient {g.shape}, moment {m.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError("Non-finite gradient passed to Adam")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)

    if hasattr(params, "bump"):
        params.bump()
    return params, state


def cosine_lr(epoch: Union[int, float], total_epochs: int, lr0: float = 1e-3, lr_final: float = 1e-6) -> float:
    """Cosine annealing from lr0 at epoch 0 to lr_final at total_epochs."""
    if not 0 <= epoch <= total_epochs:
        raise ContractError(f"Epoch {epoch} outside [0, {total_epochs}]")
    if total_epochs == 0:
        return lr0
    return lr_final + 0.5 * (lr0 - lr_final) * (1.0 + math.cos(math.pi * epoch / total_epochs))
