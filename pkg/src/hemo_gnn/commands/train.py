"""Commands to train models: single runs, cross-validation, ablations and size studies."""

from pathlib import Path

import click

from hemo_gnn.commands.context import CliContext, fail, handle_errors, pass_cli, require_dataset, success
from hemo_gnn.config.loader import dump_config
from hemo_gnn.datagen.dataset import load_dataset
from hemo_gnn.evaluation.metrics import ErrorReport
from hemo_gnn.evaluation.reports import write_csv, write_error_report, write_json
from hemo_gnn.evaluation.studies import (
    ablation_run,
    checkpoint_meta,
    cross_validate,
    dataset_size_study,
    save_run,
)
from hemo_gnn.training.folds import kfold_split
from hemo_gnn.training.trainer import train as train_model
from hemo_gnn.utils.constants import ABLATION_VARIANTS, CONFIG_FILENAME

DATASET_OPTION = click.option(
    "--dataset",
    "dataset_dir",
    required=True,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help="Dataset directory written by `hemo-gnn gen`",
)
OUT_OPTION = click.option(
    "--out",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Output directory",
)


@click.command()
@DATASET_OPTION
@OUT_OPTION
@click.option("--fold", default=None, type=click.IntRange(min=0), help="Train on every fold but this one")
@click.option("--k", default=None, type=click.IntRange(min=2), help="Number of folds (default: training.k_folds)")
@click.option("--cross-validate", "cv", is_flag=True, help="Train one model per fold and report held-out errors")
@click.option("--geometry", default=None, help="Restrict the dataset to one geometry (per-anatomy model)")
@click.option(
    "--variant",
    default=None,
    type=click.Choice(ABLATION_VARIANTS),
    help="Feature variant (default: model.variant)",
)
@click.option("--epochs", default=None, type=click.IntRange(min=1), help="Override training.epochs")
@click.option("--name", default="model", help="Base name of the checkpoint and history files (default: model)")
@pass_cli
@handle_errors
def train(ctx: CliContext, dataset_dir, out_dir, fold, k, cv, geometry, variant, epochs, name):
    """Train a graph network on a dataset.

    Without --fold the model sees every trajectory. With --fold it trains
    on the remaining folds of a seeded source-level split and records the
    held-out ids in the checkpoint, so `eval` scores the right set.

    Example:
        hemo-gnn train --dataset data/ --out runs/ --fold 0
        hemo-gnn train --dataset data/ --out runs/aorta --geometry aorta
        hemo-gnn train --dataset data/ --out runs/cv --cross-validate --k 4
    """
    if fold is not None and cv:
        fail("--fold and --cross-validate are mutually exclusive")
    config = ctx.config()
    dataset = load_dataset(require_dataset(dataset_dir))
    if geometry is not None:
        dataset = dataset.for_geometry(geometry)
    model_config = config.model.for_variant(variant) if variant else config.model
    train_config = config.training if epochs is None else config.training.model_copy(update={"epochs": epochs})
    k = k or train_config.k_folds
    seed = train_config.seed
    dump_config(config, out_dir / CONFIG_FILENAME)

    click.echo(f"Training '{model_config.variant}' on {len(dataset)} trajectories from {dataset_dir}")
    click.echo()

    if cv:
        report = cross_validate(
            dataset, model_config, train_config, k=k, seed=seed, out_dir=out_dir, workers=config.evaluation.workers
        )
        report.confidence = config.evaluation.confidence
        summary_path = write_error_report(out_dir, report, {"k": k, "split_seed": seed})
        interval = report.interval("e_p")
        success(f"{k}-fold e_p = {interval.mean:.3e} [{interval.low:.3e}, {interval.high:.3e}], see {summary_path}")
        return

    fold_spec = None
    if fold is not None:
        plan = kfold_split(dataset.ids, k, seed=seed, sources=dataset.sources)
        if fold >= len(plan):
            fail(f"--fold {fold} is out of range for {len(plan)} folds")
        fold_spec = plan[fold]
    result = train_model(dataset, train_config, fold_spec, model_config, out_dir=out_dir, run_name=name)
    path = save_run(result, out_dir, name, checkpoint_meta(result, fold, k if fold is not None else None, seed))
    success(f"Final train loss {result.history.train_losses[-1]:.4e}; checkpoint written to {path}")


@click.command()
@DATASET_OPTION
@OUT_OPTION
@click.option(
    "--variant",
    "variants",
    multiple=True,
    type=click.Choice(ABLATION_VARIANTS),
    help="Variant to run; repeat for several (default: all)",
)
@click.option("--k", default=None, type=click.IntRange(min=2), help="Number of folds (default: training.k_folds)")
@pass_cli
@handle_errors
def ablate(ctx: CliContext, dataset_dir, out_dir, variants, k):
    """Cross-validate feature ablations against the baseline.

    Each variant gets its own subdirectory of checkpoints and histories;
    errors of every variant go to one errors.csv and summary.json.

    Example:
        hemo-gnn ablate --dataset data/ --out runs/ablation --variant baseline --variant no_boundary_edges
    """
    config = ctx.config()
    dataset = load_dataset(require_dataset(dataset_dir))
    k = k or config.training.k_folds
    report = ErrorReport(confidence=config.evaluation.confidence)
    for variant in variants or ABLATION_VARIANTS:
        click.echo(f"Variant {variant}:")
        variant_report = ablation_run(
            dataset,
            variant,
            config.model,
            config.training,
            k=k,
            seed=config.training.seed,
            out_dir=out_dir / variant,
        )
        report.extend(variant_report.rows)
        interval = variant_report.interval("e_p")
        click.echo(f"  e_p = {interval.mean:.3e} [{interval.low:.3e}, {interval.high:.3e}]")
    summary_path = write_error_report(out_dir, report, {"k": k, "split_seed": config.training.seed})
    success(f"Ablation report written to {summary_path}")


SIZE_COLUMNS = ["size", "repeat", "train_loss", "test_loss", "train_e_p", "train_e_q", "test_e_p", "test_e_q"]


@click.command()
@DATASET_OPTION
@OUT_OPTION
@click.option("--sizes", default="10,20,40", help="Comma-separated training-set sizes in sources (default: 10,20,40)")
@click.option("--repeats", default=3, type=click.IntRange(min=1), help="Seeded repetitions per size (default: 3)")
@click.option(
    "--test-fraction",
    default=0.2,
    type=click.FloatRange(0, 1, min_open=True, max_open=True),
    help="Share of sources held out (default: 0.2)",
)
@pass_cli
@handle_errors
def converge(ctx: CliContext, dataset_dir, out_dir, sizes, repeats, test_fraction):
    """Train on growing subsets of the dataset and record the generalization gap.

    Example:
        hemo-gnn converge --dataset data/ --out runs/size --sizes 10,20,40 --repeats 3
    """
    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"'{sizes}' is not a comma-separated list of integers", param_hint="--sizes")
    config = ctx.config()
    dataset = load_dataset(require_dataset(dataset_dir))
    result = dataset_size_study(
        dataset,
        size_list,
        repeats=repeats,
        model_config=config.model,
        train_config=config.training,
        test_fraction=test_fraction,
        seed=config.training.seed,
    )
    result.confidence = config.evaluation.confidence
    write_csv(out_dir / "convergence.csv", SIZE_COLUMNS, (row.to_dict() for row in result.rows))
    summary_path = write_json(out_dir / "summary.json", {"sizes": result.summary()})
    for size, stats in result.summary().items():
        click.echo(f"  {size:>4} sources: test e_p = {stats['test_e_p']['mean']:.3e}")
    success(f"Convergence study written to {summary_path}")
