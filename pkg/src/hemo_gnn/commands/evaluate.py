"""Commands to score trained models: rollout errors, feature sensitivity and the 1D comparison."""

from pathlib import Path
from typing import List

import click

from hemo_gnn.commands.context import (
    VARIANT_OPTION,
    CliContext,
    fail,
    handle_errors,
    pass_cli,
    require_dataset,
    success,
)
from hemo_gnn.datagen.dataset import Dataset, load_dataset
from hemo_gnn.evaluation.comparison import compare_models
from hemo_gnn.evaluation.metrics import ErrorReport, evaluate_model
from hemo_gnn.evaluation.reports import CURVES_FILENAME, write_csv, write_curves, write_error_report, write_json
from hemo_gnn.evaluation.sensitivity import DEFAULT_FEATURES, SENSITIVITY_FEATURES, sensitivity_analysis
from hemo_gnn.mgn.checkpoint import Checkpoint

MODEL_HELP = "Checkpoint written by `hemo-gnn train`"
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
    help="Report directory",
)
COMPARISON_COLUMNS = [
    "trajectory_id",
    "gnn_e_p",
    "gnn_e_q",
    "gnn_runtime_s",
    "oned_e_p",
    "oned_e_q",
    "oned_runtime_s",
    "error",
]
ALL_OPTION = click.option(
    "--all",
    "use_all",
    is_flag=True,
    help="Score every trajectory instead of the checkpoint's held-out set",
)


def held_out_ids(checkpoint: Checkpoint, dataset: Dataset, use_all: bool) -> List[str]:
    """Held-out ids recorded in the checkpoint, or every trajectory."""
    test_ids = checkpoint.meta.get("test_ids") or []
    if use_all or not test_ids:
        return dataset.ids
    known = set(dataset.ids)
    return [i for i in test_ids if i in known]


@click.command(name="eval")
@click.option(
    "--model",
    "model_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help=MODEL_HELP,
)
@DATASET_OPTION
@OUT_OPTION
@ALL_OPTION
@VARIANT_OPTION
@pass_cli
@handle_errors
def evaluate(ctx: CliContext, model_path, dataset_dir, out_dir, use_all, variant):
    """Roll the model out on every trajectory and report e_p and e_q.

    Writes errors.csv (one row per trajectory) and summary.json (means
    and confidence intervals).

    Example:
        hemo-gnn eval --model runs/model.ckpt --dataset data/ --out reports/
    """
    config = ctx.config()
    checkpoint = ctx.checkpoint(model_path, variant)
    dataset = load_dataset(require_dataset(dataset_dir))
    ids = held_out_ids(checkpoint, dataset, use_all)
    if not ids:
        fail(f"None of the checkpoint's held-out trajectories are in {dataset_dir}")

    click.echo(f"Evaluating {model_path.name} on {len(ids)} trajectories")
    rows = evaluate_model(
        checkpoint.model,
        dataset.pairs(ids),
        fold=checkpoint.meta.get("fold"),
        workers=config.evaluation.workers,
    )
    report = ErrorReport(rows, confidence=config.evaluation.confidence)
    extra = {"model": model_path.name, "config_hash": checkpoint.config_hash}
    summary_path = write_error_report(out_dir, report, extra)
    e_p, e_q = report.interval("e_p"), report.interval("e_q")
    click.echo(f"  e_p = {e_p.mean:.3e} [{e_p.low:.3e}, {e_p.high:.3e}]")
    click.echo(f"  e_q = {e_q.mean:.3e} [{e_q.low:.3e}, {e_q.high:.3e}]")
    success(f"Report written to {summary_path}")


@click.command()
@click.option(
    "--model",
    "model_paths",
    required=True,
    multiple=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help=f"{MODEL_HELP}; repeat to average over several models",
)
@DATASET_OPTION
@OUT_OPTION
@click.option("--trajectory", "trajectory_id", default=None, help="Trajectory id (default: first held-out trajectory)")
@click.option(
    "--feature",
    "features",
    multiple=True,
    type=click.Choice(list(SENSITIVITY_FEATURES)),
    help="Feature to perturb; repeat for several (default: the standard set)",
)
@click.option(
    "--std",
    default=None,
    type=click.FloatRange(min=0),
    help="Noise std (default: evaluation.sensitivity_std)",
)
@VARIANT_OPTION
@pass_cli
@handle_errors
def sensitivity(ctx: CliContext, model_paths, dataset_dir, out_dir, trajectory_id, features, std, variant):
    """Rollout error growth when one normalized feature is perturbed.

    Writes sensitivity.csv (feature, factor_p, factor_q) and sensitivity.json.

    Example:
        hemo-gnn sensitivity --model a.ckpt --model b.ckpt --dataset data/ --out reports/ --feature rcr
    """
    config = ctx.config()
    checkpoints = [ctx.checkpoint(path, variant) for path in model_paths]
    dataset = load_dataset(require_dataset(dataset_dir))
    if trajectory_id is None:
        candidates = held_out_ids(checkpoints[0], dataset, use_all=False)
        if not candidates:
            fail(f"None of the checkpoint's held-out trajectories are in {dataset_dir}; pass --trajectory")
        trajectory_id = candidates[0]
    std = config.evaluation.sensitivity_std if std is None else std

    report = sensitivity_analysis(
        [c.model for c in checkpoints],
        dataset.graph_of(trajectory_id),
        dataset.trajectory(trajectory_id),
        features=list(features) or DEFAULT_FEATURES,
        std=std,
        seed=ctx.seed_or(0),
    )
    rows = [{"feature": name, "factor_p": p, "factor_q": q} for name, (p, q) in report.factors.items()]
    write_csv(out_dir / "sensitivity.csv", ["feature", "factor_p", "factor_q"], rows)
    summary_path = write_json(out_dir / "sensitivity.json", report.to_dict())
    for row in rows:
        click.echo(f"  {row['feature']:<8} e_p x{row['factor_p']:.3f}  e_q x{row['factor_q']:.3f}")
    success(f"Sensitivity of {len(checkpoints)} model(s) written to {summary_path}")


@click.command()
@click.option(
    "--model",
    "model_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help=MODEL_HELP,
)
@DATASET_OPTION
@OUT_OPTION
@click.option(
    "--solver-dt",
    default=None,
    type=click.FloatRange(min=0, min_open=True),
    help="Time step of the 1D re-simulation (default: the dataset's solver dt)",
)
@ALL_OPTION
@VARIANT_OPTION
@pass_cli
@handle_errors
def compare(ctx: CliContext, model_path, dataset_dir, out_dir, solver_dt, use_all, variant):
    """Compare the graph network against re-running the 1D solver.

    Writes comparison.csv (paired errors and runtimes), curves.csv
    (pressure and flow traces of sampled branch nodes) and summary.json.

    Example:
        hemo-gnn compare --model runs/model.ckpt --dataset data/ --out reports/ --solver-dt 0.002
    """
    config = ctx.config()
    checkpoint = ctx.checkpoint(model_path, variant)
    dataset = load_dataset(require_dataset(dataset_dir))
    ids = held_out_ids(checkpoint, dataset, use_all)

    report = compare_models(
        dataset,
        checkpoint.model,
        ids=ids,
        solver_dt=solver_dt,
        curve_nodes=config.evaluation.curve_nodes,
        seed=ctx.seed_or(0),
    )
    write_csv(out_dir / "comparison.csv", COMPARISON_COLUMNS, (row.to_dict() for row in report.rows))
    write_curves(out_dir / CURVES_FILENAME, report.curves)
    summary_path = write_json(out_dir / "summary.json", report.summary())
    for row in report.failures:
        click.echo(click.style(f"  ✗ {row.trajectory_id}: {row.error}", fg="yellow"))
    if report.failures:
        fail(f"{len(report.failures)} of {len(report.rows)} re-simulations failed; see {out_dir / 'comparison.csv'}")
    success(f"Comparison of {len(report.rows)} trajectories written to {summary_path}")
