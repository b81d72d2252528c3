"""Numpy neural-network kernel: MLPs, Adam and gradient checks."""

from hemo_gnn.nn.mlp import MlpCache, MlpParams, init_mlp, leaky_relu, mlp_backward, mlp_forward
from hemo_gnn.nn.optim import AdamState, adam_step, cosine_lr
from hemo_gnn.nn.gradcheck import GradCheckReport, check_gradients, grad_check

__all__ = [
    "MlpCache",
    "MlpParams",
    "init_mlp",
    "leaky_relu",
    "mlp_backward",
    "mlp_forward",
    "AdamState",
    "adam_step",
    "cosine_lr",
    "GradCheckReport",
    "check_gradients",
    "grad_check",
]
