"""Command to generate a synthetic dataset with the 1D solver."""

from pathlib import Path

import click

from hemo_gnn.commands.context import CliContext, fail, handle_errors, pass_cli, success
from hemo_gnn.datagen.dataset import MANIFEST_FILENAME, build_dataset
from hemo_gnn.datagen.templates import load_specs


@click.command()
@click.option(
    "--spec",
    "spec_files",
    required=True,
    multiple=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="YAML file of geometry templates; repeat to combine several files",
)
@click.option(
    "--out",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Dataset directory to write",
)
@click.option(
    "--n",
    "-n",
    "perturbations",
    default=1,
    type=click.IntRange(min=1),
    help="Boundary-condition perturbations per geometry (default: 1)",
)
@click.option(
    "--dt",
    default=None,
    type=click.FloatRange(min=0, min_open=True),
    help="Sampling interval of the trajectories in seconds (overrides the global --dt)",
)
@click.option("--seed", default=None, type=int, help="Random seed of the perturbations (overrides the global --seed)")
@click.option("--id", "dataset_id", default=None, help="Dataset id (default: the output directory name)")
@click.option(
    "--workers",
    default=None,
    type=click.IntRange(min=1),
    help="Parallel simulations (default: datagen.workers or HEMO_GNN_WORKERS)",
)
@pass_cli
@handle_errors
def gen(ctx: CliContext, spec_files, out_dir, perturbations, dt, seed, dataset_id, workers):
    """Simulate geometry templates and write a training dataset.

    Every --spec file lists geometry templates (tube, bifurcation, tree).
    Every geometry is simulated under N random scalings of its inflow and
    outlet resistances and capacitances.

    Example:
        hemo-gnn gen --spec geometries.yaml --n 32 --dt 0.01 --seed 3 --out data/
    """
    config = ctx.config()
    datagen = config.datagen if dt is None else config.datagen.model_copy(update={"dt": dt})
    seed = ctx.seed_or(0) if seed is None else seed
    geometry_specs = [spec for path in spec_files for spec in load_specs(path)]
    ids = [spec.id for spec in geometry_specs]
    repeated = sorted({i for i in ids if ids.count(i) > 1})
    if repeated:
        fail(f"Geometry ids appear in more than one --spec file: {', '.join(repeated)}")
    click.echo(f"Generating {len(geometry_specs) * perturbations} simulations into {out_dir}")
    click.echo(f"  dt: {datagen.dt} s, solver dt: {config.solver.dt} s, seed: {seed}")
    click.echo()

    manifest = build_dataset(
        geometry_specs,
        perturbations,
        out_dir,
        settings=datagen,
        solver=config.solver,
        seed=seed,
        dataset_id=dataset_id or out_dir.name,
        workers=workers,
    )

    for entry in manifest.failed_entries:
        click.echo(click.style(f"  ✗ {entry.source_id}: {entry.error}", fg="yellow"))
    if manifest.failed_entries:
        failed = len(manifest.failed_entries)
        fail(f"{failed} of {len(manifest.entries)} simulations failed; see {out_dir / MANIFEST_FILENAME}")
    success(f"{len(manifest.ok_entries)}/{len(manifest.entries)} simulations written to {out_dir / MANIFEST_FILENAME}")
