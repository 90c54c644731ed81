"""Tests for the environment-backed settings and output paths."""

from pathlib import Path
import sys

sys.path.append(str(Path(__file__).resolve().parents[2]))

from app.config.environment_config import EnvironmentConfiguration
from app.config.storage_paths import getCheckpointPath, getSeedDirectory, resolveOutputDirectory


def test_env_file_values_are_overridden_by_the_environment(tmp_path: Path) -> None:
    """Values in .env files apply unless the process environment sets them too."""

    env_file = tmp_path / "local.env"
    env_file.write_text("# comentario\nLTCIL_LOG_LEVEL=debug\nLTCIL_OUTPUT_DIR='/tmp/desde-archivo'\n", encoding="utf-8")
    configuration = EnvironmentConfiguration(env_files=[env_file], environ={})
    assert configuration.get_log_level() == "DEBUG"
    assert configuration.get_output_root_override() == Path("/tmp/desde-archivo")
    overridden = EnvironmentConfiguration(env_files=[env_file], environ={"LTCIL_LOG_LEVEL": "ERROR"})
    assert overridden.get_log_level() == "ERROR"


def test_invalid_or_missing_log_level_falls_back_to_info() -> None:
    """Unknown level names resolve to INFO."""

    assert EnvironmentConfiguration(env_files=[], environ={}).get_log_level() == "INFO"
    assert EnvironmentConfiguration(env_files=[], environ={"LTCIL_LOG_LEVEL": "verbose"}).get_log_level() == "INFO"


def test_relative_output_directories_use_the_override(tmp_path: Path) -> None:
    """Relative folders resolve under LTCIL_OUTPUT_DIR; absolute ones are kept."""

    configuration = EnvironmentConfiguration(env_files=[], environ={"LTCIL_OUTPUT_DIR": str(tmp_path)})
    assert resolveOutputDirectory("runs/exp", configuration) == tmp_path / "runs" / "exp"
    absolute = tmp_path / "absoluta"
    assert resolveOutputDirectory(str(absolute), configuration) == absolute


def test_seed_and_checkpoint_paths(tmp_path: Path) -> None:
    """Seed folders are created on demand and checkpoints are named per task."""

    seed_directory = getSeedDirectory(tmp_path, 7)
    assert seed_directory == tmp_path / "seed_7"
    assert seed_directory.is_dir()
    assert getCheckpointPath(seed_directory, 3).name == "model_task_3.json"
    assert not getSeedDirectory(tmp_path, 8, create=False).exists()
