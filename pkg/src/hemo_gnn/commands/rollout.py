"""Command to roll a trained model out on a graph."""

from pathlib import Path

import click
import numpy as np

from hemo_gnn.commands.context import VARIANT_OPTION, CliContext, fail, handle_errors, pass_cli, success
from hemo_gnn.datagen.loading import loading_inlet_series, loading_step_count
from hemo_gnn.graph.io import load_graph, load_trajectory, save_trajectory
from hemo_gnn.graph.state import NodeState
from hemo_gnn.mgn.model import rollout as run_rollout


@click.command()
@click.option(
    "--model",
    "model_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Checkpoint written by `hemo-gnn train`",
)
@click.option(
    "--graph",
    "graph_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Graph file",
)
@click.option("--steps", required=True, type=click.IntRange(min=1), help="Number of steps to predict")
@click.option(
    "--trajectory",
    "trajectory_path",
    default=None,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Start from this trajectory's first state and follow its inlet flow",
)
@click.option(
    "--out",
    "out_path",
    default=None,
    type=click.Path(dir_okay=False, path_type=Path),
    help="Output trajectory file (default: rollout.json)",
)
@VARIANT_OPTION
@pass_cli
@handle_errors
def rollout(ctx: CliContext, model_path, graph_path, steps, trajectory_path, out_path, variant):
    """Predict STEPS time steps and write a trajectory of STEPS + 1 states.

    Without --trajectory the rollout starts from rest (p = p_min, q = 0),
    ramps through the loading phase and then follows the graph's stored
    inflow cycle, repeating it as often as needed.

    Example:
        hemo-gnn rollout --model runs/model.ckpt --graph data/graphs/bif_p000.json --steps 100
    """
    config = ctx.config()
    checkpoint = ctx.checkpoint(model_path, variant)
    graph = load_graph(graph_path)
    out_path = out_path or Path("rollout.json")

    if trajectory_path is not None:
        trajectory = load_trajectory(trajectory_path)
        if trajectory.n_nodes != graph.n_nodes:
            fail(f"Trajectory {trajectory_path} has {trajectory.n_nodes} nodes, graph has {graph.n_nodes}")
        if steps > trajectory.n_steps - 1:
            fail(f"Trajectory {trajectory_path} provides inlet flow for {trajectory.n_steps - 1} steps only")
        initial = trajectory.state(0)
        inlet = trajectory.inlet_flow[1 : steps + 1]
        flags = trajectory.loading_flags[1 : steps + 1]
        name = trajectory.id
    else:
        if graph.inflow is None or graph.dt is None:
            fail(f"Graph {graph_path} stores no inflow waveform; pass --trajectory")
        n_loading = loading_step_count(config.datagen.loading_time, graph.dt)
        inlet, flags = loading_inlet_series(graph.inflow, n_loading, steps)
        initial = NodeState(
            pressure=np.full(graph.n_nodes, graph.p_min),
            flow=np.zeros(graph.n_nodes),
            loading=n_loading > 0,
        )
        name = graph.id

    predicted = run_rollout(checkpoint.model, graph, initial, inlet, steps, loading_schedule=flags)
    predicted.id = f"{name}_rollout"
    predicted.source_id = predicted.id
    save_trajectory(predicted, out_path)
    success(f"{predicted.n_steps} states written to {out_path}")
