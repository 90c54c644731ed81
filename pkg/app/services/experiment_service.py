"""Business logic that orchestrates complete experiments: data, scenario, training and
artifact persistence per seed, seed aggregation and parameter sweeps.
"""

from __future__ import annotations

import copy
import logging
import shutil
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config.environment_config import EnvironmentConfiguration
from app.config.experiment_config import ConfigurationError, config_to_dict, validate_config
from app.config.storage_paths import (
    SEED_FOLDER_PREFIX,
    SUMMARY_FILENAME,
    SWEEP_SUMMARY_FILENAME,
    getCheckpointPath,
    getSeedDirectory,
    resolveOutputDirectory,
)
from app.daos.checkpoint_dao import CheckpointDAO, CheckpointDAOError
from app.daos.dataset_dao import DatasetDAOError
from app.daos.results_dao import ResultsDAO, ResultsDAOError
from app.dtos.dataset_dto import Dataset
from app.dtos.experiment_dto import DatasetKind, ExperimentConfig, SweepAxis
from app.dtos.memory_dto import BudgetMode
from app.dtos.metrics_dto import RunLog
from app.dtos.scenario_dto import TaskSequence
from app.services.data_service import DataService, DataServiceError
from app.services.memory_service import MemoryService
from app.services.model_service import create_model
from app.services.scenario_service import ScenarioService, ScenarioServiceError
from app.services.training_service import TrainingService, TrainingServiceError


logger = logging.getLogger(__name__)

SEED_STRIDE = 100
SEED_OFFSETS: Dict[str, int] = {
    "data": 1,
    "split": 2,
    "scenario": 3,
    "init": 4,
    "sampler": 5,
    "memory": 6,
}


class ExperimentServiceError(RuntimeError):
    """Raised when an experiment cannot be completed."""


class OutputExistsError(ExperimentServiceError):
    """Raised when the output directory already holds results and overwrite was not requested."""


def derive_seed(master_seed: int, stage: str) -> int:
    """``master_seed * 100 + offset``; every pipeline stage owns one fixed offset."""

    return master_seed * SEED_STRIDE + SEED_OFFSETS[stage]


class ExperimentService:
    """Run configured experiments and write their artifacts."""

    def __init__(
        self,
        data_service: Optional[DataService] = None,
        scenario_service: Optional[ScenarioService] = None,
        memory_service: Optional[MemoryService] = None,
        training_service: Optional[TrainingService] = None,
        results_dao: Optional[ResultsDAO] = None,
        checkpoint_dao: Optional[CheckpointDAO] = None,
        environment: Optional[EnvironmentConfiguration] = None,
    ) -> None:
        """Wire collaborators; every dependency has a default implementation."""

        self._data_service = data_service or DataService()
        self._scenario_service = scenario_service or ScenarioService()
        self._memory_service = memory_service or MemoryService()
        self._training_service = training_service or TrainingService(self._memory_service)
        self._results_dao = results_dao or ResultsDAO()
        self._checkpoint_dao = checkpoint_dao or CheckpointDAO()
        self._environment = environment

    def output_directory(self, config: ExperimentConfig) -> Path:
        return resolveOutputDirectory(config.outputDir, self._environment)

    def build_datasets(self, config: ExperimentConfig, seed: int) -> Tuple[Dataset, Dataset]:
        """Return ``(train, test)`` for one master seed."""

        dataset_config = config.dataset
        if dataset_config.kind is DatasetKind.CSV:
            dataset = self._data_service.load_csv(dataset_config.csvPath)
        else:
            dataset = self._data_service.generate_synthetic(
                dataset_config.numClasses,
                dataset_config.perClass,
                dataset_config.featureDim,
                dataset_config.clusterSpread,
                derive_seed(seed, "data"),
                dataset_config.radius,
            )
        return self._data_service.split_train_test(dataset, dataset_config.testPerClass, derive_seed(seed, "split"))

    def build_sequence(self, config: ExperimentConfig, train: Dataset, seed: int) -> TaskSequence:
        scenario = config.scenario
        return self._scenario_service.build(
            scenario.kind,
            train,
            scenario.rho,
            scenario.nMax,
            scenario.numTasks,
            scenario.baseClasses,
            derive_seed(seed, "scenario"),
        )

    def build_manifest(self, config: ExperimentConfig, seed: int) -> Dict[str, Any]:
        """Return the task manifest of ``seed`` without training anything."""

        try:
            train, _test = self.build_datasets(config, seed)
            sequence = self.build_sequence(config, train, seed)
        except (DataServiceError, DatasetDAOError, ScenarioServiceError) as exc:
            raise ExperimentServiceError(f"No fue posible construir el escenario: {exc}") from exc
        manifest = self._scenario_service.to_manifest(sequence)
        manifest["master_seed"] = seed
        return manifest

    def _prepare_output(self, directory: Path, overwrite: bool, summary_name: str) -> None:
        if not directory.exists():
            try:
                directory.mkdir(parents=True)
            except OSError as exc:
                raise ExperimentServiceError(f"No fue posible crear el directorio '{directory}': {exc}") from exc
            return
        previous = sorted(path for path in directory.iterdir() if path.name.startswith(SEED_FOLDER_PREFIX))
        summaries = [directory / name for name in (SUMMARY_FILENAME, summary_name) if (directory / name).exists()]
        if not previous and not summaries:
            return
        if not overwrite:
            raise OutputExistsError(
                f"El directorio '{directory}' ya contiene resultados; use --overwrite para reemplazarlos."
            )
        logger.info("Eliminando resultados previos en %s", directory)
        for path in previous:
            if path.is_dir():
                shutil.rmtree(path)
        for path in summaries:
            path.unlink()

    def run_seed(self, config: ExperimentConfig, seed: int, output_directory: Path) -> RunLog:
        """Build data and scenario, train, and write every per-seed artifact."""

        try:
            seed_directory = getSeedDirectory(output_directory, seed)
        except OSError as exc:
            raise ExperimentServiceError(f"Semilla {seed}: no fue posible crear su directorio: {exc}") from exc
        logger.info("Semilla %s: resultados en %s", seed, seed_directory)
        try:
            train, test = self.build_datasets(config, seed)
            sequence = self.build_sequence(config, train, seed)
            manifest = self._scenario_service.to_manifest(sequence)
            manifest["master_seed"] = seed
            self._results_dao.write_manifest(seed_directory, manifest)
        except (DataServiceError, DatasetDAOError, ScenarioServiceError, ResultsDAOError) as exc:
            raise ExperimentServiceError(f"Semilla {seed}: no fue posible preparar los datos: {exc}") from exc

        init_seed = derive_seed(seed, "init")
        model = create_model(
            train.featureDim, config.model.hiddenLayers, init_seed, config.model.headKind, config.model.cosineScale
        )
        memory = self._memory_service.create(
            config.memory.mode, config.memory.budget, config.memory.selection, derive_seed(seed, "memory")
        )
        train_config = copy.deepcopy(config.train)
        train_config.seed = derive_seed(seed, "sampler")
        executed = copy.deepcopy(config)
        executed.train = train_config
        executed.seeds = [seed]

        def save_checkpoint(current_model, task_id: int) -> None:
            if config.saveCheckpoints:
                self._checkpoint_dao.save(current_model, getCheckpointPath(seed_directory, task_id))

        try:
            run_log = self._training_service.run_incremental(
                sequence,
                train,
                test,
                model,
                memory,
                train_config,
                two_stage=config.twoStage,
                predictor=config.predictor.value,
                init_seed=init_seed,
                config_snapshot=config_to_dict(executed),
                on_task_end=save_checkpoint,
            )
        except TrainingServiceError as exc:
            if exc.partialLog is not None:
                exc.partialLog.seed = seed
                try:
                    self._results_dao.write_seed_outputs(seed_directory, exc.partialLog)
                    logger.error("Semilla %s: resultados parciales guardados en %s", seed, seed_directory)
                except ResultsDAOError as write_exc:
                    logger.error("Semilla %s: no se guardaron los resultados parciales: %s", seed, write_exc)
            raise ExperimentServiceError(f"Semilla {seed}: {exc}") from exc
        except CheckpointDAOError as exc:
            raise ExperimentServiceError(f"Semilla {seed}: {exc}") from exc

        run_log.seed = seed
        try:
            self._results_dao.write_seed_outputs(seed_directory, run_log)
        except ResultsDAOError as exc:
            raise ExperimentServiceError(f"Semilla {seed}: {exc}") from exc
        logger.info(
            "Semilla %s terminada: exactitud incremental media %.4f", seed, run_log.averageIncrementalAccuracy
        )
        return run_log

    @staticmethod
    def summary_row(config: ExperimentConfig, run_logs: Sequence[RunLog]) -> Dict[str, Any]:
        """Mean and population standard deviation of average incremental accuracy across seeds."""

        values = np.array([run_log.averageIncrementalAccuracy for run_log in run_logs], dtype=np.float64)
        return {
            "scenario": config.scenario.kind.value,
            "strategy": config.strategy.value,
            "two_stage": config.twoStage,
            "rho": config.scenario.rho,
            "avg_incremental_mean": float(values.mean()),
            "avg_incremental_std": float(values.std()),
            "num_seeds": len(run_logs),
        }

    def run_experiment(self, config: ExperimentConfig, overwrite: bool = False) -> List[RunLog]:
        """Run every seed sequentially, then write ``summary.csv``."""

        output_directory = self.output_directory(config)
        self._prepare_output(output_directory, overwrite, SWEEP_SUMMARY_FILENAME)
        run_logs = [self.run_seed(config, seed, output_directory) for seed in config.seeds]
        try:
            self._results_dao.write_summary(output_directory / SUMMARY_FILENAME, [self.summary_row(config, run_logs)])
        except ResultsDAOError as exc:
            raise ExperimentServiceError(str(exc)) from exc
        logger.info("Experimento terminado: %s semillas en %s", len(run_logs), output_directory)
        return run_logs

    @staticmethod
    def apply_axis(config: ExperimentConfig, axis: SweepAxis, value: Union[str, int, float]) -> ExperimentConfig:
        """Return a validated copy of ``config`` with ``axis`` set to ``value``."""

        variant = copy.deepcopy(config)
        try:
            if axis is SweepAxis.RHO:
                variant.scenario.rho = float(value)
            elif axis is SweepAxis.NUM_TASKS:
                variant.scenario.numTasks = int(value)
            elif axis is SweepAxis.SEED:
                variant.seeds = [int(value)]
            else:
                if axis is SweepAxis.EXEMPLARS_PER_CLASS and variant.memory.mode is not BudgetMode.PER_CLASS:
                    raise ConfigurationError("requiere memory.mode = per_class", "memory.mode")
                variant.memory.budget = int(value)
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"valor de barrido inválido '{value}'", axis.value) from exc
        return validate_config(variant)

    def sweep(
        self,
        config: ExperimentConfig,
        axis: SweepAxis,
        values: Sequence[Union[str, int, float]],
        overwrite: bool = False,
    ) -> Path:
        """Run one experiment per value under ``<output>/<axis>_<value>`` and write ``sweep_summary.csv``."""

        if not values:
            raise ConfigurationError("se requiere al menos un valor", "values")
        variants = [self.apply_axis(config, axis, value) for value in values]
        output_directory = self.output_directory(config)
        sweep_path = output_directory / SWEEP_SUMMARY_FILENAME
        if sweep_path.exists() and not overwrite:
            raise OutputExistsError(
                f"El directorio '{output_directory}' ya contiene un barrido; use --overwrite para reemplazarlo."
            )

        rows = []
        for value, variant in zip(values, variants):
            variant.outputDir = str(output_directory / f"{axis.value}_{value}")
            run_logs = self.run_experiment(variant, overwrite)
            row = self.summary_row(variant, run_logs)
            row[axis.value] = value
            rows.append(row)
        try:
            self._results_dao.write_summary(sweep_path, rows, extra_columns=[axis.value])
        except ResultsDAOError as exc:
            raise ExperimentServiceError(str(exc)) from exc
        logger.info("Barrido de %s terminado: %s valores", axis.value, len(values))
        return sweep_path
