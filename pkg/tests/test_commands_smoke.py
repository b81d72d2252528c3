"""Smoke tests for CLI commands: gen, train, eval, rollout, compare, sensitivity, report."""

import csv
import json

import pytest
from click.testing import CliRunner

from hemo_gnn.cli import main
from hemo_gnn.graph.io import load_trajectory


@pytest.fixture
def runner():
    """Create Click CLI test runner."""
    return CliRunner()


def invoke(runner, config, *args):
    """Run a command with the tiny configuration and seed 7."""
    return runner.invoke(main, ["--config", str(config), "--seed", "7", *args], catch_exceptions=False)


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_cli_e2e_smoke(runner, tmp_path, tiny_config_file, tiny_specs_file):
    """End-to-end smoke test: gen -> train -> eval -> rollout -> compare -> sensitivity -> report."""
    data = tmp_path / "data"
    runs = tmp_path / "runs"
    reports = tmp_path / "reports"

    # 1. Generate two geometries with two perturbations each
    res = invoke(runner, tiny_config_file, "gen", "--spec", str(tiny_specs_file), "--out", str(data), "-n", "2")
    assert res.exit_code == 0, res.output
    manifest = json.loads((data / "manifest.json").read_text())
    assert len(manifest["entries"]) == 4
    assert len(list((data / "trajectories").glob("*.json"))) == 8

    # 2. Train on every fold but the first
    res = invoke(runner, tiny_config_file, "train", "--dataset", str(data), "--out", str(runs), "--fold", "0")
    assert res.exit_code == 0, res.output
    for name in ["model.ckpt", "model_history.csv", "hemo.config.yaml", "logs/model.log"]:
        assert (runs / name).exists(), f"Missing {name}"
    checkpoint = json.loads((runs / "model.ckpt").read_text())
    held_out = checkpoint["meta"]["test_ids"]
    assert held_out

    # 3. Evaluate on the held-out trajectories
    res = invoke(runner, tiny_config_file, "eval", "--model", str(runs / "model.ckpt"), "--dataset", str(data),
                 "--out", str(reports))
    assert res.exit_code == 0, res.output
    rows = read_rows(reports / "errors.csv")
    assert sorted(r["trajectory_id"] for r in rows) == sorted(held_out)
    summary = json.loads((reports / "summary.json").read_text())
    assert summary["variants"]["baseline"]["n_trajectories"] == len(held_out)

    # 4. Roll out from rest on a stored graph
    out = tmp_path / "rollout.json"
    res = invoke(runner, tiny_config_file, "rollout", "--model", str(runs / "model.ckpt"),
                 "--graph", str(data / "graphs" / "tube_p000.json"), "--steps", "15", "--out", str(out))
    assert res.exit_code == 0, res.output
    predicted = load_trajectory(out)
    assert predicted.n_steps == 16
    assert predicted.loading_steps == 2

    # 5. Compare against the 1D solver
    res = invoke(runner, tiny_config_file, "compare", "--model", str(runs / "model.ckpt"), "--dataset", str(data),
                 "--out", str(reports / "compare"))
    assert res.exit_code == 0, res.output
    comparison = read_rows(reports / "compare" / "comparison.csv")
    assert len(comparison) == len(held_out)
    assert all(r["error"] == "" for r in comparison)
    assert (reports / "compare" / "curves.csv").exists()

    # 6. Sensitivity without noise leaves errors unchanged
    res = invoke(runner, tiny_config_file, "sensitivity", "--model", str(runs / "model.ckpt"), "--dataset",
                 str(data), "--out", str(reports / "sens"), "--feature", "rcr", "--std", "0")
    assert res.exit_code == 0, res.output
    factors = read_rows(reports / "sens" / "sensitivity.csv")
    assert [(r["feature"], float(r["factor_p"]), float(r["factor_q"])) for r in factors] == [("rcr", 1.0, 1.0)]

    # 7. Summarize errors and training logs
    res = invoke(runner, tiny_config_file, "report", "--errors", str(reports / "errors.csv"), "--logs",
                 str(runs / "logs"), "--out", str(reports / "combined.json"))
    assert res.exit_code == 0, res.output
    combined = json.loads((reports / "combined.json").read_text())
    assert [run["run"] for run in combined["runs"]] == ["model"]
    assert combined["runs"][0]["last_train_loss"] is not None


def test_rollout_along_trajectory(runner, tmp_path, tiny_config_file, tiny_dataset_dir):
    """Test rollout that follows a stored trajectory's inlet flow."""
    runs = tmp_path / "runs"
    res = invoke(runner, tiny_config_file, "train", "--dataset", str(tiny_dataset_dir), "--out", str(runs))
    assert res.exit_code == 0, res.output

    trajectory = tiny_dataset_dir / "trajectories" / "bif_p000_o0.json"
    out = tmp_path / "along.json"
    res = invoke(runner, tiny_config_file, "rollout", "--model", str(runs / "model.ckpt"), "--graph",
                 str(tiny_dataset_dir / "graphs" / "bif_p000.json"), "--trajectory", str(trajectory),
                 "--steps", "12", "--out", str(out))
    assert res.exit_code == 0, res.output
    predicted = load_trajectory(out)
    truth = load_trajectory(trajectory)
    assert predicted.n_steps == truth.n_steps
    assert predicted.id == "bif_p000_o0_rollout"
    assert (predicted.inlet_flow[1:] == truth.inlet_flow[1:]).all()

    res = invoke(runner, tiny_config_file, "rollout", "--model", str(runs / "model.ckpt"), "--graph",
                 str(tiny_dataset_dir / "graphs" / "bif_p000.json"), "--trajectory", str(trajectory),
                 "--steps", "50")
    assert res.exit_code == 1
    assert "inlet flow for 12 steps" in res.output


def test_cross_validate_and_ablate(runner, tmp_path, tiny_config_file, tiny_dataset_dir):
    """Test the cross-validation and ablation commands."""
    res = invoke(runner, tiny_config_file, "train", "--dataset", str(tiny_dataset_dir), "--out",
                 str(tmp_path / "cv"), "--cross-validate")
    assert res.exit_code == 0, res.output
    assert len(read_rows(tmp_path / "cv" / "errors.csv")) == 8
    assert (tmp_path / "cv" / "baseline_fold1.ckpt").exists()

    res = invoke(runner, tiny_config_file, "ablate", "--dataset", str(tiny_dataset_dir), "--out",
                 str(tmp_path / "ablation"), "--variant", "baseline", "--variant", "no_rcr")
    assert res.exit_code == 0, res.output
    summary = json.loads((tmp_path / "ablation" / "summary.json").read_text())
    assert sorted(summary["variants"]) == ["baseline", "no_rcr"]
    assert (tmp_path / "ablation" / "no_rcr" / "no_rcr_fold0.ckpt").exists()

    # checkpoints are only scored as the variant they were trained as
    baseline = tmp_path / "ablation" / "baseline" / "baseline_fold0.ckpt"
    res = invoke(runner, tiny_config_file, "eval", "--model", str(baseline), "--dataset", str(tiny_dataset_dir),
                 "--out", str(tmp_path / "eval_no_tau"), "--variant", "no_tau")
    assert res.exit_code == 1
    assert "different model configuration" in res.output
    assert not (tmp_path / "eval_no_tau" / "errors.csv").exists()

    res = invoke(runner, tiny_config_file, "compare", "--model", str(baseline), "--dataset", str(tiny_dataset_dir),
                 "--out", str(tmp_path / "compare_no_rcr"), "--variant", "no_rcr")
    assert res.exit_code == 1
    assert "different model configuration" in res.output

    res = invoke(runner, tiny_config_file, "eval", "--model",
                 str(tmp_path / "ablation" / "no_rcr" / "no_rcr_fold0.ckpt"), "--dataset", str(tiny_dataset_dir),
                 "--out", str(tmp_path / "eval_no_rcr"), "--variant", "no_rcr")
    assert res.exit_code == 0, res.output
    summary = json.loads((tmp_path / "eval_no_rcr" / "summary.json").read_text())
    assert sorted(summary["variants"]) == ["no_rcr"]


def test_fold_and_cross_validate_conflict(runner, tmp_path, tiny_config_file, tiny_dataset_dir):
    """Test that --fold and --cross-validate cannot be combined."""
    res = invoke(runner, tiny_config_file, "train", "--dataset", str(tiny_dataset_dir), "--out", str(tmp_path),
                 "--fold", "0", "--cross-validate")
    assert res.exit_code == 1
    assert "mutually exclusive" in res.output


def test_gen_reports_failed_simulations(runner, tmp_path, tiny_specs_file):
    """Test that gen exits with status 1 when a simulation fails."""
    config = tmp_path / "bad.config.yaml"
    config.write_text("solver:\n  dt: 0.01\ndatagen:\n  dt: 0.03\n  loading_time: 0.03\n")
    res = invoke(runner, config, "gen", "--spec", str(tiny_specs_file), "--out", str(tmp_path / "data"))
    assert res.exit_code == 1
    assert "simulations failed" in res.output
    assert (tmp_path / "data" / "manifest.json").exists()


def test_gen_command_level_dt_and_seed(runner, tmp_path, tiny_config_file, tiny_specs_file):
    """Test that gen --spec --n --dt --seed --out overrides the configured and global values."""
    data = tmp_path / "data"
    res = invoke(runner, tiny_config_file, "gen", "--spec", str(tiny_specs_file), "--n", "2", "--dt", "0.04",
                 "--seed", "3", "--out", str(data))
    assert res.exit_code == 0, res.output
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["dt"] == 0.04
    assert manifest["seed"] == 3
    assert len(manifest["entries"]) == 4
    trajectory = load_trajectory(next((data / "trajectories").glob("*.json")))
    assert trajectory.dt == pytest.approx(0.04)


def test_gen_combines_spec_files(runner, tmp_path, tiny_config_file, tiny_specs_file):
    """Test that repeated --spec files are simulated together and repeated ids are refused."""
    tube, bif = tiny_specs_file.read_text().split("  - id: bif\n")
    first = tmp_path / "tube.yaml"
    first.write_text(tube)
    second = tmp_path / "bif.yaml"
    second.write_text("geometries:\n  - id: bif\n" + bif)

    res = invoke(runner, tiny_config_file, "gen", "--spec", str(first), "--spec", str(second), "--n", "1",
                 "--out", str(tmp_path / "data"))
    assert res.exit_code == 0, res.output
    manifest = json.loads((tmp_path / "data" / "manifest.json").read_text())
    assert sorted(e["geometry_id"] for e in manifest["entries"]) == ["bif", "tube"]

    res = invoke(runner, tiny_config_file, "gen", "--spec", str(first), "--spec", str(first),
                 "--out", str(tmp_path / "twice"))
    assert res.exit_code == 1
    assert "more than one --spec file" in res.output


def test_gen_positional_specs_rejected(runner, tmp_path, tiny_config_file, tiny_specs_file):
    """Test that the geometry file must be passed with --spec."""
    res = runner.invoke(main, ["--config", str(tiny_config_file), "gen", str(tiny_specs_file),
                               "--out", str(tmp_path / "data")])
    assert res.exit_code == 2
