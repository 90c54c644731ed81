"""Business logic for incremental training: stage 1 (instance-balanced, CE + auxiliary loss),
stage 2 (class-balanced rebalancing of the current head and the LWS vector) and the
task-by-task loop that records a ``RunLog``.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from app.dtos.dataset_dto import Dataset
from app.dtos.memory_dto import ExemplarMemory
from app.dtos.metrics_dto import RunLog, TaskLossHistory
from app.dtos.model_dto import IncrementalModel
from app.dtos.scenario_dto import TaskSequence
from app.dtos.training_dto import AuxKind, LossReport, TrainConfig
from app.services.loss_service import cross_entropy, feature_distill, logit_distill
from app.services.memory_service import MemoryService
from app.services.metrics_service import average_incremental, evaluate_task, forgetting, head_tail_breakdown
from app.services.model_service import (
    add_task_head,
    backward,
    compute_class_means,
    copy_model,
    extract_features,
    forward_logits,
    forward_with_cache,
    freeze_for_stage2,
)
from app.services.numerics_service import sgd_step
from app.services.sampler_service import class_balanced_batches, instance_balanced_batches


logger = logging.getLogger(__name__)

TaskEndCallback = Callable[[IncrementalModel, int], None]


class TrainingServiceError(RuntimeError):
    """Raised when a task fails; ``partialLog`` keeps everything recorded before the failure."""

    def __init__(self, message: str, partial_log: Optional[RunLog] = None) -> None:
        super().__init__(message)
        self.partialLog = partial_log


def stage_seed(base_seed: int, task_id: int, stage: int) -> int:
    """Sampler seed of one stage of one task."""

    return base_seed * 1000 + task_id * 10 + stage


class TrainingService:
    """Run the two-stage procedure over a task sequence."""

    def __init__(self, memory_service: Optional[MemoryService] = None) -> None:
        """Store the collaborator that maintains the exemplar memory."""

        self._memory_service = memory_service or MemoryService()

    @staticmethod
    def _pool_ids(task_data: Dataset, memory: ExemplarMemory) -> List[int]:
        return sorted(set(int(index) for index in task_data.indices) | set(memory.all_indices()))

    def train_stage1(
        self,
        model: IncrementalModel,
        task_data: Dataset,
        memory: ExemplarMemory,
        old_model: Optional[IncrementalModel],
        cfg: TrainConfig,
        source: Optional[Dataset] = None,
        seed: Optional[int] = None,
    ) -> List[LossReport]:
        """Minimize CE over ``D_t ∪ M`` plus the configured auxiliary loss with momentum SGD.

        ``source`` resolves memory ids (defaults to ``task_data``). Distillation targets come
        from ``old_model`` and are computed once, before the first epoch.
        """

        if model.hasLws:
            raise TrainingServiceError("La primera etapa no admite el vector de escalado.")
        source = source or task_data
        ids = self._pool_ids(task_data, memory)
        inputs = source.features_for(ids)
        columns = model.column_of()
        targets = np.array([columns[int(label)] for label in source.labels_for(ids)], dtype=np.int64)
        position = {example_id: row for row, example_id in enumerate(ids)}

        aux = cfg.aux
        c_new = model.headWidths[-1]
        c_old = model.numClasses - c_new
        use_aux = old_model is not None and c_old > 0 and aux.kind is not AuxKind.NONE
        old_logits = forward_logits(old_model, inputs) if use_aux and aux.kind is AuxKind.LOGIT_DISTILL else None
        old_features = (
            extract_features(old_model, inputs) if use_aux and aux.kind is AuxKind.FEATURE_DISTILL else None
        )

        params = model.params
        params.reset_velocity()
        params.zero_grad()
        seed = cfg.seed if seed is None else seed
        history: List[LossReport] = []
        for epoch in range(cfg.epochsStage1):
            lr = cfg.lr_at(epoch)
            ce_sum = 0.0
            aux_sum = 0.0
            for batch in instance_balanced_batches(ids, cfg.batchSize, seed, epoch):
                rows = np.array([position[example_id] for example_id in batch], dtype=np.int64)
                logits, cache = forward_with_cache(model, inputs[rows])
                ce, grad_logits = cross_entropy(logits, targets[rows])
                aux_value = 0.0
                grad_features = None
                if old_logits is not None:
                    aux_value, grad_old = logit_distill(logits[:, :c_old], old_logits[rows], aux.temperature)
                    grad_logits[:, :c_old] += grad_old
                elif old_features is not None:
                    aux_value, grad_features = feature_distill(
                        cache.features, old_features[rows], aux.lambdaBase, c_old, c_new
                    )
                backward(model, grad_logits, cache, grad_features)
                sgd_step(params, lr, cfg.momentum, cfg.weightDecay)
                ce_sum += ce * len(batch)
                aux_sum += aux_value * len(batch)
            report = LossReport.of(ce_sum / len(ids), aux_sum / len(ids))
            history.append(report)
            logger.debug("Etapa 1, época %s: ce=%.6f aux=%.6f lr=%s", epoch, report.ce, report.aux, lr)
        return history

    def train_stage2(
        self,
        model: IncrementalModel,
        task_data: Dataset,
        memory: ExemplarMemory,
        cfg: TrainConfig,
        source: Optional[Dataset] = None,
        seed: Optional[int] = None,
    ) -> List[LossReport]:
        """Freeze the extractor and old heads, then train the current head and LWS on balanced batches.

        Only cross-entropy is used; every report carries ``aux = 0``.
        """

        source = source or task_data
        freeze_for_stage2(model, cfg.freezeOldHeads, cfg.useLws)
        ids = self._pool_ids(task_data, memory)
        labels = source.labels_for(ids)
        pools: Dict[int, List[int]] = {}
        for example_id, label in zip(ids, labels):
            pools.setdefault(int(label), []).append(example_id)
        missing = [class_id for class_id in model.classIds if class_id not in pools]
        if missing:
            logger.warning("Clases sin ejemplos en la segunda etapa: %s", missing)

        inputs = source.features_for(ids)
        position = {example_id: row for row, example_id in enumerate(ids)}
        columns = model.column_of()
        targets = np.array([columns[int(label)] for label in labels], dtype=np.int64)
        steps = max(math.ceil(len(ids) / cfg.batchSize), 1)

        params = model.params
        params.reset_velocity()
        params.zero_grad()
        seed = cfg.seed if seed is None else seed
        stream = class_balanced_batches(pools, cfg.batchSize, steps * cfg.epochsStage2, seed)
        history: List[LossReport] = []
        for epoch in range(cfg.epochsStage2):
            ce_sum = 0.0
            drawn = 0
            for batch in itertools.islice(stream, steps):
                rows = np.array([position[example_id] for example_id in batch], dtype=np.int64)
                logits, cache = forward_with_cache(model, inputs[rows], scaled=model.hasLws)
                ce, grad_logits = cross_entropy(logits, targets[rows])
                backward(model, grad_logits, cache)
                sgd_step(params, cfg.lrStage2, cfg.momentum, cfg.weightDecay)
                ce_sum += ce * len(batch)
                drawn += len(batch)
            report = LossReport.of(ce_sum / drawn, 0.0)
            history.append(report)
            logger.debug("Etapa 2, época %s: ce=%.6f", epoch, report.ce)
        return history

    def _class_mean_ids(self, task_data: Dataset, memory: ExemplarMemory, new_classes: Sequence[int]) -> Dict[int, List[int]]:
        ids_by_class = {class_id: list(indices) for class_id, indices in memory.store.items()}
        for class_id in new_classes:
            ids_by_class[class_id] = list(task_data.perClassIndex.get(class_id, []))
        return ids_by_class

    def run_incremental(
        self,
        sequence: TaskSequence,
        train: Dataset,
        test: Dataset,
        model: IncrementalModel,
        memory: ExemplarMemory,
        cfg: TrainConfig,
        two_stage: bool = True,
        predictor: str = "scaled",
        init_seed: int = 0,
        config_snapshot: Optional[Dict[str, object]] = None,
        on_task_end: Optional[TaskEndCallback] = None,
    ) -> RunLog:
        """For each task: add head, stage 1, optional stage 2, memory update, snapshot, evaluation.

        A failing task raises ``TrainingServiceError`` carrying the partial ``RunLog``.
        """

        run_log = RunLog(config=dict(config_snapshot or {}), seed=cfg.seed)
        old_model: Optional[IncrementalModel] = None
        started = time.perf_counter()
        current_task = 0
        try:
            for task in sequence.tasks:
                current_task = task.taskId
                logger.info(
                    "Tarea %s/%s: %s clases nuevas, %s ejemplos, %s en memoria",
                    task.taskId,
                    sequence.numTasks,
                    len(task.classIds),
                    len(task.exampleIndices),
                    memory.total_stored(),
                )
                task_data = train.subset(task.exampleIndices)
                add_task_head(model, len(task.classIds), init_seed, class_ids=task.classIds)
                history = TaskLossHistory(taskId=task.taskId)
                history.stage1 = self.train_stage1(
                    model, task_data, memory, old_model, cfg, train, stage_seed(cfg.seed, task.taskId, 1)
                )
                if two_stage:
                    history.stage2 = self.train_stage2(
                        model, task_data, memory, cfg, train, stage_seed(cfg.seed, task.taskId, 2)
                    )
                run_log.lossHistory.append(history)

                self._memory_service.update_after_task(
                    memory,
                    task_data,
                    lambda x: extract_features(model, x),
                    model.numClasses,
                )
                old_model = copy_model(model)
                if predictor == "ncm":
                    compute_class_means(model, train, self._class_mean_ids(task_data, memory, task.classIds))

                task_eval = evaluate_task(model, test, model.classIds, predictor, task.taskId)
                if sequence.profile is not None:
                    breakdown = head_tail_breakdown(task_eval, sequence.profile, sequence.rankOrder)
                    task_eval.headMean, task_eval.tailMean = breakdown.headMean, breakdown.tailMean
                run_log.taskEvals.append(task_eval)
                if model.hasLws:
                    run_log.lwsDump[task.taskId] = {
                        class_id: float(weight) for class_id, weight in zip(model.classIds, model.lws)
                    }
                logger.info(
                    "Tarea %s evaluada: exactitud media %.4f sobre %s clases",
                    task.taskId,
                    task_eval.averageAccuracy,
                    task_eval.numSeenClasses,
                )
                if on_task_end is not None:
                    on_task_end(model, task.taskId)

            run_log.averageIncrementalAccuracy = average_incremental(run_log.taskEvals)
            run_log.forgetting = forgetting(run_log.taskEvals)
            run_log.completed = True
        except (RuntimeError, ValueError, KeyError) as exc:
            run_log.memoryDump = memory.dump()
            run_log.wallTime = time.perf_counter() - started
            logger.error("La tarea %s falló: %s", current_task, exc)
            raise TrainingServiceError(f"Falló el entrenamiento en la tarea {current_task}: {exc}", run_log) from exc

        run_log.memoryDump = memory.dump()
        run_log.wallTime = time.perf_counter() - started
        return run_log
