"""Command to summarize error tables and run logs."""

from pathlib import Path

import click

from hemo_gnn.commands.context import CliContext, fail, handle_errors, pass_cli, success
from hemo_gnn.evaluation.metrics import ErrorReport
from hemo_gnn.evaluation.reports import error_summary, read_error_table, summarize_logs, write_json


@click.command()
@click.option(
    "--errors",
    "error_tables",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="errors.csv written by eval, ablate or train --cross-validate; repeat to merge",
)
@click.option(
    "--logs",
    "logs_dir",
    default=None,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help="Directory of run logs (e.g. runs/logs)",
)
@click.option(
    "--out",
    "out_path",
    default=None,
    type=click.Path(dir_okay=False, path_type=Path),
    help="Write the combined summary as JSON",
)
@pass_cli
@handle_errors
def report(ctx: CliContext, error_tables, logs_dir, out_path):
    """Summarize rollout errors per variant and training or generation runs.

    Example:
        hemo-gnn report --errors reports/errors.csv --logs runs/logs --out reports/combined.json
    """
    if not error_tables and logs_dir is None:
        fail("Pass at least one --errors table or a --logs directory")
    config = ctx.config()
    payload = {}

    if error_tables:
        errors = ErrorReport(confidence=config.evaluation.confidence)
        for table in error_tables:
            errors.extend(read_error_table(table))
        if not errors.rows:
            fail("The error tables hold no rows")
        payload.update(error_summary(errors))
        click.echo(f"Rollout errors ({len(errors.rows)} trajectories):")
        for variant, summary in payload["variants"].items():
            e_p, e_q = summary["e_p"], summary["e_q"]
            click.echo(
                f"  {variant:<18} e_p {e_p['mean']:.3e} [{e_p['low']:.3e}, {e_p['high']:.3e}]  "
                f"e_q {e_q['mean']:.3e} [{e_q['low']:.3e}, {e_q['high']:.3e}]"
            )
        click.echo()

    if logs_dir is not None:
        runs = summarize_logs(logs_dir)
        payload["runs"] = [run.to_dict() for run in runs]
        click.echo(f"Runs in {logs_dir}:")
        for run in runs:
            loss = "" if run.last_train_loss is None else f", last train loss {run.last_train_loss:.4e}"
            click.echo(f"  {run.run:<18} {run.event_count} events, {run.error_count} failed{loss}")
        click.echo()

    if out_path is not None:
        write_json(out_path, payload)
        success(f"Summary written to {out_path}")
