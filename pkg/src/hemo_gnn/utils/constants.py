"""Shared constants for hemo-gnn."""

# Units are CGS throughout (cm, g, s; pressure in barye)
BARYE_PER_MMHG = 1333.22

DEFAULT_VISCOSITY = 0.04  # dynamic, g / (cm s)
DEFAULT_DENSITY = 1.06  # g / cm^3
DEFAULT_KINEMATIC_VISCOSITY = 3.77e-2  # cm^2 / s

# Wall constants emulating a rigid wall: k1 = 0 and a large k3
RIGID_K1 = 0.0
RIGID_K2 = 0.0
RIGID_K3 = 1.0e9

LOADING_TIME = 0.1  # seconds

# Node-type and edge-type one-hot orderings
NODE_TYPES = ["branch", "junction", "inlet", "outlet"]
EDGE_TYPES = ["branch_branch", "junction_junction", "inlet_edge", "outlet_edge"]

# Node feature layout: name -> (first channel, width)
NODE_FEATURES = {
    "p": (0, 1),
    "q": (1, 1),
    "A": (2, 1),
    "alpha": (3, 4),
    "phi": (7, 3),
    "T_cc": (10, 1),
    "p_min": (11, 1),
    "p_max": (12, 1),
    "R_p": (13, 1),
    "C": (14, 1),
    "R_d": (15, 1),
    "l": (16, 1),
}
NODE_FEATURE_WIDTH = 17

EDGE_FEATURES = {
    "d": (0, 3),
    "z": (3, 1),
    "beta": (4, 4),
}
EDGE_FEATURE_WIDTH = 8

OUTPUT_WIDTH = 2

# Features excluded from normalization (unit vectors)
UNNORMALIZED_NODE_FEATURES = ("phi",)
UNNORMALIZED_EDGE_FEATURES = ("d",)

# Feature sets removed by the ablation variants
TAU_NODE_FEATURES = ("A", "phi", "T_cc", "p_min", "p_max", "R_p", "C", "R_d", "l")
TAU_EDGE_FEATURES = ("beta",)
RCR_NODE_FEATURES = ("R_p", "C", "R_d")

ABLATION_VARIANTS = ["baseline", "no_tau", "no_boundary_edges", "no_rcr"]

SCHEMA_VERSION = 1

CONFIG_FILENAME = "hemo.config.yaml"
ENV_LOG_LEVEL = "HEMO_GNN_LOG_LEVEL"
ENV_WORKERS = "HEMO_GNN_WORKERS"


def feature_channels(layout: dict, names) -> list:
    """Expand feature names into a sorted list of channel indices."""
    channels = []
    for name in names:
        start, width = layout[name]
        channels.extend(range(start, start + width))
    return sorted(channels)
