"""Central finite-difference verification of analytic gradients."""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from hemo_gnn.nn.mlp import MlpParams, mlp_backward, mlp_forward


@dataclass
class GradCheckReport:
    """Relative error per parameter array, keyed by name."""

    errors: Dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-5

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / (||a|| + ||n||), zero when both vanish."""
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def numerical_gradient(loss: Callable[[], float], array: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar loss with respect to every entry of `array`, perturbed in place."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        original = flat[k]
        flat[k] = original + eps
        plus = loss()
        flat[k] = original - eps
        minus = loss()
        flat[k] = original
        out[k] = (plus - minus) / (2.0 * eps)
    return grad


def check_gradients(
    loss: Callable[[], float],
    arrays: Sequence[np.ndarray],
    analytic: Sequence[np.ndarray],
    names: Optional[List[str]] = None,
    eps: float = 1e-6,
    tolerance: float = 1e-5,
) -> GradCheckReport:
    """Compare analytic gradients of `loss` against central differences array by array."""
    names = names or [f"array{k}" for k in range(len(arrays))]
    report = GradCheckReport(tolerance=tolerance)
    for name, array, grad in zip(names, arrays, analytic):
        report.errors[name] = relative_error(grad, numerical_gradient(loss, array, eps))
    return report


def grad_check(
    params: MlpParams,
    x: np.ndarray,
    tolerance: float = 1e-5,
    eps: float = 1e-6,
    seed: int = 0,
) -> GradCheckReport:
    """Check mlp_backward on the loss sum(y * r) for a fixed random r.

    The report also covers the input gradient under the name "x".
    """
    x = np.array(x, dtype=float)
    y, _ = mlp_forward(params, x)
    weights = np.random.default_rng(seed).standard_normal(y.shape)

    def loss() -> float:
        output, _ = mlp_forward(params, x)
        return float(np.sum(output * weights))

    _, cache = mlp_forward(params, x)
    dx, grads = mlp_backward(params, cache, weights)
    return check_gradients(
        loss,
        params.arrays() + [x],
        grads.arrays() + [dx],
        names=params.names() + ["x"],
        eps=eps,
        tolerance=tolerance,
    )
