"""Helpers to resolve the directories and file names written by the harness."""

from pathlib import Path
from typing import Optional

from app.config.environment_config import EnvironmentConfiguration


DEFAULT_OUTPUT_FOLDER_NAME = "runs"
SEED_FOLDER_PREFIX = "seed_"

RESULTS_FILENAME = "results.csv"
RUN_LOG_FILENAME = "run_log.json"
MANIFEST_FILENAME = "manifest.json"
LWS_WEIGHTS_FILENAME = "lws_weights.csv"
PER_CLASS_ACCURACY_FILENAME = "per_class_accuracy.csv"
PREDICTIONS_FILENAME = "predictions.csv"
SUMMARY_FILENAME = "summary.csv"
SWEEP_SUMMARY_FILENAME = "sweep_summary.csv"
CHECKPOINT_PATTERN = "model_task_{task_id}.json"


def getOutputRoot(configuration: Optional[EnvironmentConfiguration] = None) -> Path:
    """Return the directory under which relative output folders are created."""

    override = (configuration or EnvironmentConfiguration()).get_output_root_override()
    if override is not None:
        return override
    return Path.cwd()


def resolveOutputDirectory(
    output_dir: str,
    configuration: Optional[EnvironmentConfiguration] = None,
) -> Path:
    """Return the absolute output directory for a configured ``output_dir``."""

    candidate = Path(output_dir or DEFAULT_OUTPUT_FOLDER_NAME).expanduser()
    if candidate.is_absolute():
        return candidate
    return getOutputRoot(configuration) / candidate


def getSeedDirectory(output_directory: Path, seed: int, create: bool = True) -> Path:
    """Return the folder that keeps every artifact of a single seed."""

    directory = output_directory / f"{SEED_FOLDER_PREFIX}{seed}"
    if create:
        directory.mkdir(parents=True, exist_ok=True)
    return directory


def getCheckpointPath(seed_directory: Path, task_id: int) -> Path:
    """Return the checkpoint file path written after ``task_id``."""

    return seed_directory / CHECKPOINT_PATTERN.format(task_id=task_id)
