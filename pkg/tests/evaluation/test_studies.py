"""Tests for cross-validation studies, the solver comparison and report files."""

import json

import numpy as np
import pytest

from hemo_gnn.config.settings import TrainConfig
from hemo_gnn.errors import ContractError, DatasetError
from hemo_gnn.evaluation.comparison import CURVE_COLUMNS, compare_models
from hemo_gnn.evaluation.metrics import ErrorReport, TrajectoryErrors
from hemo_gnn.evaluation.reports import (
    read_error_table,
    summarize_logs,
    summarize_run_log,
    write_curves,
    write_error_report,
)
from hemo_gnn.evaluation.studies import ablation_run, cross_validate, dataset_size_study
from hemo_gnn.mgn.checkpoint import load_checkpoint
from hemo_gnn.mgn.model import GnnModel

ONE_EPOCH = TrainConfig(stride=2, epochs=1, batch_size=32, noise_std=0.01, k_folds=2)


class TestCrossValidate:
    """Tests for per-fold training and evaluation."""

    def test_every_trajectory_tested_once(self, tmp_path, tiny_dataset, tiny_model_config):
        report = cross_validate(tiny_dataset, tiny_model_config, ONE_EPOCH, seed=1, out_dir=tmp_path)
        assert sorted(r.trajectory_id for r in report.rows) == sorted(tiny_dataset.ids)
        assert report.folds == [0, 1]
        for fold in (0, 1):
            assert (tmp_path / f"baseline_fold{fold}_history.csv").exists()
            assert (tmp_path / "logs" / f"baseline_fold{fold}.log").exists()
            checkpoint = load_checkpoint(tmp_path / f"baseline_fold{fold}.ckpt")
            assert checkpoint.meta["fold"] == fold
            tested = {r.trajectory_id for r in report.rows if r.fold == fold}
            assert set(checkpoint.meta["test_ids"]) == tested

    def test_augmented_variants_share_a_fold(self, tiny_dataset, tiny_model_config):
        report = cross_validate(tiny_dataset, tiny_model_config, ONE_EPOCH, seed=2)
        fold_of = {r.trajectory_id: r.fold for r in report.rows}
        for source in set(tiny_dataset.sources):
            folds = {fold_of[i] for i in tiny_dataset.source_subset([source]).ids}
            assert len(folds) == 1


class TestAblation:
    """Tests for ablation variants."""

    def test_variant_recorded_on_rows(self, tiny_dataset, tiny_model_config):
        report = ablation_run(tiny_dataset, "no_tau", tiny_model_config, ONE_EPOCH)
        assert {r.variant for r in report.rows} == {"no_tau"}
        assert len(report.rows) == len(tiny_dataset)

    def test_unknown_variant(self, tiny_dataset):
        with pytest.raises(ContractError, match="Unknown variant"):
            ablation_run(tiny_dataset, "no_edges")


class TestDatasetSizeStudy:
    """Tests for the training-set size study."""

    def test_rows_per_size_and_repeat(self, tiny_dataset, tiny_model_config):
        result = dataset_size_study(
            tiny_dataset, [1, 3], repeats=2, model_config=tiny_model_config, train_config=ONE_EPOCH,
            test_fraction=0.25,
        )
        assert result.sizes == [1, 3]
        assert len(result.rows) == 4
        summary = result.summary()
        assert set(summary[3]) == {"train_loss", "test_loss", "train_e_p", "train_e_q", "test_e_p", "test_e_q"}
        assert all(np.isfinite(r.test_e_q) for r in result.rows)

    def test_size_larger_than_pool(self, tiny_dataset):
        with pytest.raises(ContractError, match="Training sizes"):
            dataset_size_study(tiny_dataset, [4], test_fraction=0.25)


class TestCompareModels:
    """Tests for graph network versus 1D solver comparisons."""

    def test_resimulation_reproduces_cycle(self, tiny_dataset, tiny_model_config):
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        # offset zero keeps the simulated cycle unrotated
        ids = [i for i in tiny_dataset.ids if i.endswith("_o0")][:2]
        report = compare_models(tiny_dataset, model, ids=ids, curve_nodes=3)
        assert [r.trajectory_id for r in report.rows] == ids
        assert not report.failures
        for row in report.rows:
            assert row.oned_e_p < 1e-3 and row.oned_e_q < 1e-3
            assert row.oned_runtime_s > 0
        assert len(report.curves) == 2 * 3 * 13
        assert report.summary()["n_failed"] == 0

    def test_solver_failure_recorded(self, tiny_dataset, tiny_model_config):
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        report = compare_models(tiny_dataset, model, ids=tiny_dataset.ids[:1], solver_dt=0.03)
        assert len(report.failures) == 1
        assert "multiple" in report.failures[0].error
        assert report.summary()["oned"]["e_p"] is None

    def test_needs_dataset_on_disk(self, tiny_dataset, tiny_model_config):
        model = GnnModel(tiny_model_config, tiny_dataset.stats)
        in_memory = tiny_dataset.subset(tiny_dataset.ids[:1])
        in_memory.root = None
        with pytest.raises(DatasetError):
            compare_models(in_memory, model)


class TestReports:
    """Tests for report files and run-log summaries."""

    def test_error_report_files(self, tmp_path):
        rows = [TrajectoryErrors("a", 0.125, 1e-7, 0.5, fold=0), TrajectoryErrors("b", 0.25, 2e-7, 0.5, fold=None)]
        summary_path = write_error_report(tmp_path, ErrorReport(rows), extra={"dataset": "tiny"})
        summary = json.loads(summary_path.read_text())
        assert summary["dataset"] == "tiny"
        assert summary["variants"]["baseline"]["n_trajectories"] == 2
        restored = read_error_table(tmp_path / "errors.csv")
        assert [(r.trajectory_id, r.fold, r.e_q) for r in restored] == [("a", 0, 1e-7), ("b", None, 2e-7)]

    def test_missing_error_table(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            read_error_table(tmp_path / "errors.csv")

    def test_error_table_missing_columns(self, tmp_path):
        path = tmp_path / "errors.csv"
        path.write_text("trajectory_id,e_p\na,0.1\n")
        with pytest.raises(DatasetError, match="missing columns"):
            read_error_table(path)

    def test_curves_header(self, tmp_path):
        path = write_curves(tmp_path / "curves.csv", [])
        assert path.read_text().strip() == ",".join(CURVE_COLUMNS)

    def test_run_log_summary(self, tmp_path):
        log = tmp_path / "fold0.log"
        events = [
            {"timestamp": "2024-01-01T00:00:00+00:00", "train_loss": 2.0, "test_loss": 3.0, "duration_ms": 10},
            {"timestamp": "2024-01-01T00:01:00+00:00", "train_loss": 1.0, "test_loss": 3.5, "duration_ms": 30},
            {"timestamp": "2024-01-01T00:02:00", "success": False, "error": "boom"},
        ]
        log.write_text("\n".join(json.dumps(e) for e in events) + "\nnot json\n")
        summary = summarize_run_log(log)
        assert (summary.event_count, summary.success_count, summary.error_count) == (3, 2, 1)
        assert summary.last_train_loss == 1.0
        assert summary.best_test_loss == 3.0
        assert summary.avg_duration_ms == 20.0
        assert summary.to_dict()["last_event_ts"] == "2024-01-01T00:02:00+00:00"

    def test_logs_directory(self, tmp_path):
        assert summarize_logs(tmp_path / "missing") == []
        (tmp_path / "b.log").write_text("")
        (tmp_path / "a.log").write_text("")
        assert [s.run for s in summarize_logs(tmp_path)] == ["a", "b"]
