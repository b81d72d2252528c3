"""Graph network surrogate: encode, process, decode and rollout."""

from hemo_gnn.mgn.tensors import GraphTensors, concatenate, prepare_graph
from hemo_gnn.mgn.model import (
    FeaturePerturbation,
    GnnModel,
    LatentGraph,
    ParameterSet,
    decode,
    encode,
    gnn_step,
    process_step,
    rollout,
)
from hemo_gnn.mgn.checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "GraphTensors",
    "concatenate",
    "prepare_graph",
    "FeaturePerturbation",
    "GnnModel",
    "LatentGraph",
    "ParameterSet",
    "decode",
    "encode",
    "gnn_step",
    "process_step",
    "rollout",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
