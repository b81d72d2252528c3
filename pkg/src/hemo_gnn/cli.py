"""Main CLI entry point for hemo-gnn."""

import os
from pathlib import Path

import click

from hemo_gnn.commands.context import CliContext
from hemo_gnn.commands.evaluate import compare, evaluate, sensitivity
from hemo_gnn.commands.gen import gen
from hemo_gnn.commands.report import report
from hemo_gnn.commands.rollout import rollout
from hemo_gnn.commands.train import ablate, converge, train
from hemo_gnn.utils.constants import ENV_LOG_LEVEL
from hemo_gnn.utils.logging import setup_logging


@click.group()
@click.version_option(package_name="hemo-gnn")
@click.option(
    "--config",
    "config_path",
    default=None,
    type=click.Path(dir_okay=False, path_type=Path),
    help="Path to hemo.config.yaml (default: search from the current directory, else built-in defaults)",
)
@click.option("--seed", default=None, type=int, help="Seed for generation, splits, training and sampling")
@click.option(
    "--dt",
    default=None,
    type=click.FloatRange(min=0, min_open=True),
    help="Dataset time step in seconds (overrides datagen.dt)",
)
@click.option(
    "--log-level",
    default=None,
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help=f"Logging level (default: {ENV_LOG_LEVEL} or WARNING)",
)
@click.pass_context
def main(ctx, config_path, seed, dt, log_level):
    """hemo-gnn: Graph neural network surrogates for 1D hemodynamics.

    Generate datasets with the built-in 1D solver, train MeshGraphNet-style
    models on them, and evaluate rollouts against the solver.
    """
    setup_logging(log_level or os.getenv(ENV_LOG_LEVEL, "WARNING"))
    ctx.obj = CliContext(config_path=config_path, seed=seed, dt=dt)


# Register commands
main.add_command(gen)
main.add_command(train)
main.add_command(rollout)
main.add_command(evaluate)
main.add_command(sensitivity)
main.add_command(ablate)
main.add_command(compare)
main.add_command(report)
main.add_command(converge)


if __name__ == "__main__":
    main()
