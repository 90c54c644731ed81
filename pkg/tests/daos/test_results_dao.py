"""Tests for the per-seed and summary artifact files."""

from pathlib import Path
import sys

import pytest

sys.path.append(str(Path(__file__).resolve().parents[2]))

from app.daos.results_dao import (
    PREDICTION_COLUMNS,
    RESULTS_COLUMNS,
    SUMMARY_COLUMNS,
    ResultsDAO,
    ResultsDAOError,
)
from app.dtos.metrics_dto import RunLog, TaskLossHistory
from app.dtos.training_dto import LossReport
from app.services.metrics_service import evaluate_predictions, recompute_from_predictions


def _run_log() -> RunLog:
    first = evaluate_predictions(1, [0, 1], [0, 0, 1], [0, 1, 1], [4, 5, 6])
    first.headMean, first.tailMean = 0.5, 1.0
    second = evaluate_predictions(2, [0, 1, 2], [0, 0, 1, 2], [0, 0, 2, 2], [4, 5, 6, 9])
    second.headMean, second.tailMean = 1.0, 0.5
    return RunLog(
        config={"strategy": "replay"},
        seed=3,
        taskEvals=[first, second],
        averageIncrementalAccuracy=(first.averageAccuracy + second.averageAccuracy) / 2,
        lwsDump={1: {0: 1.0, 1: 0.875}, 2: {0: 0.75, 1: 0.5, 2: 1.25}},
        memoryDump={0: [4], 1: [6]},
        lossHistory=[TaskLossHistory(taskId=1, stage1=[LossReport.of(1.5, 0.25)])],
        forgetting=0.25,
        wallTime=1.5,
        completed=True,
    )


def test_write_seed_outputs_creates_every_file(tmp_path: Path) -> None:
    """All tables and the run log land in the seed folder."""

    paths = ResultsDAO().write_seed_outputs(tmp_path / "seed_3", _run_log())
    assert sorted(path.name for path in paths) == [
        "lws_weights.csv",
        "per_class_accuracy.csv",
        "predictions.csv",
        "results.csv",
        "run_log.json",
    ]
    assert all(path.exists() for path in paths)


def test_results_table_round_trips_values(tmp_path: Path) -> None:
    """results.csv keeps the documented columns and exact accuracies."""

    dao = ResultsDAO()
    run_log = _run_log()
    dao.write_seed_outputs(tmp_path, run_log)
    frame = dao.read_results(tmp_path / "results.csv")
    assert list(frame.columns) == RESULTS_COLUMNS
    assert frame["task_id"].tolist() == [1, 2]
    assert frame["average_accuracy"].tolist() == [e.averageAccuracy for e in run_log.taskEvals]
    assert frame["seed"].tolist() == [3, 3]


def test_predictions_allow_recomputing_metrics(tmp_path: Path) -> None:
    """Metrics rebuilt from predictions.csv equal the logged accuracies."""

    dao = ResultsDAO()
    run_log = _run_log()
    dao.write_seed_outputs(tmp_path, run_log)
    rows = dao.read_predictions(tmp_path / "predictions.csv")
    assert list(rows[0]) == PREDICTION_COLUMNS
    rebuilt = recompute_from_predictions(rows)
    assert [e.perClassAccuracy for e in rebuilt] == [e.perClassAccuracy for e in run_log.taskEvals]


def test_run_log_json_uses_snake_case_keys(tmp_path: Path) -> None:
    """The JSON run log carries evaluations, dumps and losses."""

    dao = ResultsDAO()
    dao.write_seed_outputs(tmp_path, _run_log())
    payload = dao.read_json(tmp_path / "run_log.json")
    assert payload["seed"] == 3
    assert payload["completed"] is True
    assert payload["lws_dump"]["2"]["1"] == 0.5
    assert payload["memory_dump"] == {"0": [4], "1": [6]}
    assert payload["loss_history"][0]["stage1"][0]["total"] == 1.75
    assert payload["task_evals"][1]["per_class_accuracy"] == {"0": 1.0, "1": 0.0, "2": 1.0}


def test_lws_table_is_deterministic_text(tmp_path: Path) -> None:
    """Writing the same log twice yields byte-identical files."""

    dao = ResultsDAO()
    dao.write_lws_weights(tmp_path / "a", _run_log())
    dao.write_lws_weights(tmp_path / "b", _run_log())
    first = (tmp_path / "a" / "lws_weights.csv").read_bytes()
    assert first == (tmp_path / "b" / "lws_weights.csv").read_bytes()
    assert first.splitlines()[0] == b"task_id,class_id,weight"
    assert len(first.splitlines()) == 6


def test_write_summary_puts_axis_column_first(tmp_path: Path) -> None:
    """Sweep summaries start with the varied column."""

    dao = ResultsDAO()
    row = {column: 0 for column in SUMMARY_COLUMNS}
    row.update({"scenario": "shuffled", "strategy": "replay", "rho": 0.1})
    path = dao.write_summary(tmp_path / "sweep_summary.csv", [row], extra_columns=["rho"])
    frame = dao.read_results(path)
    assert list(frame.columns) == ["rho"] + [column for column in SUMMARY_COLUMNS if column != "rho"]
    assert frame["rho"].tolist() == [0.1]


def test_read_missing_file_raises(tmp_path: Path) -> None:
    """Reading a file that does not exist is a DAO error."""

    with pytest.raises(ResultsDAOError):
        ResultsDAO().read_json(tmp_path / "nada.json")
