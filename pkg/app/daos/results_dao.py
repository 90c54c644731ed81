"""Data access layer for run artifacts: CSV tables through pandas and JSON documents."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

import pandas as pd

from app.config.storage_paths import (
    LWS_WEIGHTS_FILENAME,
    MANIFEST_FILENAME,
    PER_CLASS_ACCURACY_FILENAME,
    PREDICTIONS_FILENAME,
    RESULTS_FILENAME,
    RUN_LOG_FILENAME,
)
from app.dtos.metrics_dto import RunLog


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
RESULTS_COLUMNS = ["seed", "task_id", "num_seen_classes", "average_accuracy", "head_mean", "tail_mean"]
SUMMARY_COLUMNS = [
    "scenario",
    "strategy",
    "two_stage",
    "rho",
    "avg_incremental_mean",
    "avg_incremental_std",
    "num_seeds",
]
LWS_COLUMNS = ["task_id", "class_id", "weight"]
PER_CLASS_COLUMNS = ["task_id", "class_id", "accuracy"]
PREDICTION_COLUMNS = ["task_id", "example_index", "label", "prediction"]


class ResultsDAOError(RuntimeError):
    """Raised when an artifact cannot be written or read."""


def run_log_to_dict(run_log: RunLog) -> Dict[str, Any]:
    """Return the JSON document stored as ``run_log.json``."""

    return {
        "seed": run_log.seed,
        "completed": run_log.completed,
        "config": run_log.config,
        "average_incremental_accuracy": run_log.averageIncrementalAccuracy,
        "forgetting": run_log.forgetting,
        "wall_time": run_log.wallTime,
        "task_evals": [
            {
                "task_id": task_eval.taskId,
                "num_seen_classes": task_eval.numSeenClasses,
                "average_accuracy": task_eval.averageAccuracy,
                "head_mean": task_eval.headMean,
                "tail_mean": task_eval.tailMean,
                "per_class_accuracy": {
                    str(class_id): accuracy for class_id, accuracy in sorted(task_eval.perClassAccuracy.items())
                },
            }
            for task_eval in run_log.taskEvals
        ],
        "lws_dump": {
            str(task_id): {str(class_id): weight for class_id, weight in weights.items()}
            for task_id, weights in sorted(run_log.lwsDump.items())
        },
        "memory_dump": {str(class_id): list(ids) for class_id, ids in sorted(run_log.memoryDump.items())},
        "loss_history": [
            {
                "task_id": history.taskId,
                "stage1": [{"ce": r.ce, "aux": r.aux, "total": r.total} for r in history.stage1],
                "stage2": [{"ce": r.ce, "aux": r.aux, "total": r.total} for r in history.stage2],
            }
            for history in run_log.lossHistory
        ],
    }


class ResultsDAO:
    """Write and read the per-seed and aggregate files of an experiment."""

    def _write_frame(self, frame: pd.DataFrame, path: Path) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as exc:
            raise ResultsDAOError(f"No fue posible escribir '{path}': {exc}") from exc
        logger.debug("Archivo escrito: %s", path)
        return path

    def _write_json(self, payload: Any, path: Path) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        except OSError as exc:
            raise ResultsDAOError(f"No fue posible escribir '{path}': {exc}") from exc
        logger.debug("Archivo escrito: %s", path)
        return path

    def _read_frame(self, path: Path) -> pd.DataFrame:
        try:
            return pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise ResultsDAOError(f"No fue posible leer '{path}': {exc}") from exc

    def write_results(self, seed_directory: Path, run_log: RunLog) -> Path:
        rows = [
            [
                run_log.seed,
                task_eval.taskId,
                task_eval.numSeenClasses,
                task_eval.averageAccuracy,
                task_eval.headMean,
                task_eval.tailMean,
            ]
            for task_eval in run_log.taskEvals
        ]
        frame = pd.DataFrame(rows, columns=RESULTS_COLUMNS).astype(
            {"seed": "int64", "task_id": "int64", "num_seen_classes": "int64", "average_accuracy": "float64",
             "head_mean": "float64", "tail_mean": "float64"}
        )
        return self._write_frame(frame, seed_directory / RESULTS_FILENAME)

    def write_per_class_accuracy(self, seed_directory: Path, run_log: RunLog) -> Path:
        rows = [
            [task_eval.taskId, class_id, accuracy]
            for task_eval in run_log.taskEvals
            for class_id, accuracy in sorted(task_eval.perClassAccuracy.items())
        ]
        frame = pd.DataFrame(rows, columns=PER_CLASS_COLUMNS).astype(
            {"task_id": "int64", "class_id": "int64", "accuracy": "float64"}
        )
        return self._write_frame(frame, seed_directory / PER_CLASS_ACCURACY_FILENAME)

    def write_lws_weights(self, seed_directory: Path, run_log: RunLog) -> Path:
        rows = [
            [task_id, class_id, weight]
            for task_id, weights in sorted(run_log.lwsDump.items())
            for class_id, weight in weights.items()
        ]
        frame = pd.DataFrame(rows, columns=LWS_COLUMNS).astype(
            {"task_id": "int64", "class_id": "int64", "weight": "float64"}
        )
        return self._write_frame(frame, seed_directory / LWS_WEIGHTS_FILENAME)

    def write_predictions(self, seed_directory: Path, run_log: RunLog) -> Path:
        rows = [
            [task_eval.taskId, example_index, label, prediction]
            for task_eval in run_log.taskEvals
            for example_index, label, prediction in zip(
                task_eval.exampleIndices, task_eval.labels, task_eval.predictions
            )
        ]
        frame = pd.DataFrame(rows, columns=PREDICTION_COLUMNS).astype("int64")
        return self._write_frame(frame, seed_directory / PREDICTIONS_FILENAME)

    def write_run_log(self, seed_directory: Path, run_log: RunLog) -> Path:
        return self._write_json(run_log_to_dict(run_log), seed_directory / RUN_LOG_FILENAME)

    def write_manifest(self, seed_directory: Path, manifest: Mapping[str, Any]) -> Path:
        return self._write_json(dict(manifest), seed_directory / MANIFEST_FILENAME)

    def write_seed_outputs(self, seed_directory: Path, run_log: RunLog) -> List[Path]:
        """Write every per-seed table and the run log."""

        return [
            self.write_results(seed_directory, run_log),
            self.write_per_class_accuracy(seed_directory, run_log),
            self.write_lws_weights(seed_directory, run_log),
            self.write_predictions(seed_directory, run_log),
            self.write_run_log(seed_directory, run_log),
        ]

    def write_summary(self, path: Path, rows: Sequence[Mapping[str, Any]], extra_columns: Iterable[str] = ()) -> Path:
        """Write summary rows; ``extra_columns`` (the sweep axis) go first."""

        extras = list(extra_columns)
        columns = extras + [column for column in SUMMARY_COLUMNS if column not in extras]
        frame = pd.DataFrame([[row[column] for column in columns] for row in rows], columns=columns)
        return self._write_frame(frame, path)

    def read_results(self, path: Union[str, Path]) -> pd.DataFrame:
        return self._read_frame(Path(path))

    def read_predictions(self, path: Union[str, Path]) -> List[Dict[str, int]]:
        frame = self._read_frame(Path(path))
        return [
            {column: int(value) for column, value in record.items()}
            for record in frame[PREDICTION_COLUMNS].to_dict(orient="records")
        ]

    def read_json(self, path: Union[str, Path]) -> Dict[str, Any]:
        source = Path(path)
        try:
            return json.loads(source.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ResultsDAOError(f"No fue posible leer '{source}': {exc}") from exc
