"""Shared fixtures: hand-built graphs and a tiny generated dataset."""

import numpy as np
import pytest

from hemo_gnn.config.settings import DatagenSettings, ModelConfig, SolverConfig, TrainConfig
from hemo_gnn.datagen.dataset import build_dataset, load_dataset
from hemo_gnn.datagen.templates import GeometrySpec, InflowSpec
from hemo_gnn.graph.centerline import build_graph
from hemo_gnn.hemo1d.boundary import RcrParams


@pytest.fixture
def line_graph():
    """Five nodes on the x axis: inlet, three branch nodes, one outlet."""
    positions = np.array([[float(i), 0.0, 0.0] for i in range(5)])
    return build_graph(
        positions,
        [(0, 1), (1, 2), (2, 3), (3, 4)],
        ["inlet", "branch", "branch", "branch", "outlet"],
        np.full(5, 1.0),
        {"T_cc": 1.0, "p_min": 100.0, "p_max": 200.0},
        {4: RcrParams(Rp=100.0, C=1e-4, Rd=1000.0)},
        id="line",
        dt=0.1,
        inflow=np.linspace(1.0, 2.0, 10),
    )


@pytest.fixture
def y_graph():
    """A bifurcation: inlet 0, junction 2, outlets 4 and 6."""
    positions = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [3.0, 1.0, 0.0],
            [4.0, 2.0, 0.0],
            [3.0, -1.0, 0.0],
            [4.0, -2.0, 0.0],
        ]
    )
    return build_graph(
        positions,
        [(0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (5, 6)],
        ["inlet", "branch", "junction", "junction", "outlet", "junction", "outlet"],
        np.array([2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]),
        {"T_cc": 1.0, "p_min": 0.0, "p_max": 1.0},
        {4: RcrParams.resistance(500.0), 6: RcrParams(Rp=50.0, C=1e-4, Rd=800.0)},
        id="y",
    )


@pytest.fixture(scope="session")
def tiny_specs():
    inflow = InflowSpec(mean=5.0, amplitudes=[2.0], phases=[0.0], T_cc=0.2)
    return [
        GeometrySpec(id="bif", template="bifurcation", nodes_per_segment=4, inflow=inflow),
        GeometrySpec(id="tube", template="tube", nodes_per_segment=5, inflow=inflow),
    ]


@pytest.fixture(scope="session")
def tiny_settings():
    return DatagenSettings(dt=0.02, loading_time=0.04, n_offsets=2, n_cycles=2)


@pytest.fixture(scope="session")
def tiny_solver():
    return SolverConfig(dt=0.01)


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory, tiny_specs, tiny_settings, tiny_solver):
    """Two geometries, two perturbations each, two offsets per source: eight trajectories."""
    out = tmp_path_factory.mktemp("tiny_dataset")
    build_dataset(tiny_specs, 2, out, settings=tiny_settings, solver=tiny_solver, seed=7, dataset_id="tiny")
    return out


@pytest.fixture(scope="session")
def tiny_dataset(tiny_dataset_dir):
    return load_dataset(tiny_dataset_dir)


@pytest.fixture
def tiny_model_config():
    return ModelConfig(latent_size=4, hidden_layers=1, hidden_width=8, processing_iterations=2)


@pytest.fixture
def tiny_train_config():
    return TrainConfig(stride=2, epochs=2, batch_size=16, noise_std=0.01, lr0=1e-3, lr_final=1e-5, k_folds=2)


TINY_CONFIG_YAML = """\
solver:
  dt: 0.01
model:
  latent_size: 4
  hidden_layers: 1
  hidden_width: 8
  processing_iterations: 2
training:
  stride: 2
  epochs: 1
  batch_size: 16
  k_folds: 2
datagen:
  dt: 0.02
  loading_time: 0.04
  n_offsets: 2
evaluation:
  curve_nodes: 3
"""


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "hemo.config.yaml"
    path.write_text(TINY_CONFIG_YAML)
    return path


TINY_SPECS_YAML = """\
geometries:
  - id: tube
    template: tube
    nodes_per_segment: 5
    inflow:
      mean: 5.0
      amplitudes: [2.0]
      phases: [0.0]
      T_cc: 0.2
  - id: bif
    template: bifurcation
    nodes_per_segment: 4
    inflow:
      mean: 5.0
      amplitudes: [2.0]
      phases: [0.0]
      T_cc: 0.2
"""


@pytest.fixture
def tiny_specs_file(tmp_path):
    path = tmp_path / "specs.yaml"
    path.write_text(TINY_SPECS_YAML)
    return path
