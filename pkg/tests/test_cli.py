"""Tests for CLI commands."""

import pytest
from click.testing import CliRunner

from hemo_gnn.cli import main


@pytest.fixture
def runner():
    """Create a CLI test runner."""
    return CliRunner()


def test_cli_help(runner):
    """Test that the CLI help command works."""
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    assert "hemo-gnn" in result.output
    for command in ["gen", "train", "rollout", "eval", "sensitivity", "ablate", "compare", "report", "converge"]:
        assert command in result.output


def test_gen_command_help(runner):
    """Test that the gen command help works."""
    result = runner.invoke(main, ["gen", "--help"])
    assert result.exit_code == 0
    assert "Simulate geometry templates" in result.output


def test_train_command_help(runner):
    """Test that the train command help works."""
    result = runner.invoke(main, ["train", "--help"])
    assert result.exit_code == 0
    assert "--cross-validate" in result.output


def test_unknown_command(runner):
    """Test that an unknown command is a usage error."""
    result = runner.invoke(main, ["serve"])
    assert result.exit_code == 2


def test_missing_required_option(runner):
    """Test that a missing required option is a usage error."""
    result = runner.invoke(main, ["rollout", "--steps", "3"])
    assert result.exit_code == 2
    assert "--model" in result.output


def test_invalid_dt(runner, tmp_path):
    """Test that a non-positive --dt is rejected by the option type."""
    result = runner.invoke(main, ["--dt", "0", "report", "--logs", str(tmp_path)])
    assert result.exit_code == 2


def test_missing_config_file(runner, tmp_path):
    """Test that an explicit config path that does not exist is reported."""
    result = runner.invoke(main, ["--config", str(tmp_path / "nope.yaml"), "report", "--logs", str(tmp_path)])
    assert result.exit_code == 1
    assert "Error:" in result.output
    assert "not found" in result.output


def test_invalid_config_file(runner, tmp_path):
    """Test that an invalid configuration exits with status 1."""
    config = tmp_path / "hemo.config.yaml"
    config.write_text("training:\n  stride: 0\n")
    result = runner.invoke(main, ["--config", str(config), "report", "--logs", str(tmp_path)])
    assert result.exit_code == 1
    assert "Invalid configuration" in result.output


def test_not_a_dataset(runner, tmp_path, tiny_config_file):
    """Test that training on a directory without a manifest fails cleanly."""
    empty = tmp_path / "empty"
    empty.mkdir()
    result = runner.invoke(
        main, ["--config", str(tiny_config_file), "train", "--dataset", str(empty), "--out", str(tmp_path / "runs")]
    )
    assert result.exit_code == 1
    assert "not a dataset directory" in result.output


def test_report_needs_input(runner, tiny_config_file):
    """Test that report without tables or logs fails."""
    result = runner.invoke(main, ["--config", str(tiny_config_file), "report"])
    assert result.exit_code == 1
    assert "--errors" in result.output


def test_converge_rejects_bad_sizes(runner, tmp_path, tiny_dataset_dir):
    """Test that a malformed --sizes list is a usage error."""
    result = runner.invoke(
        main, ["converge", "--dataset", str(tiny_dataset_dir), "--out", str(tmp_path), "--sizes", "1,two"]
    )
    assert result.exit_code == 2
    assert "comma-separated" in result.output
