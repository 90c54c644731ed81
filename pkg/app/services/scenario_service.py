"""Business logic to build long-tailed class profiles and CIL task sequences."""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional

import numpy as np

from app.dtos.dataset_dto import Dataset
from app.dtos.scenario_dto import ImbalanceProfile, ScenarioKind, TaskDTO, TaskSequence
from app.services.data_service import InsufficientSamplesError


logger = logging.getLogger(__name__)

RANK_STREAM = 0
SUBSAMPLE_STREAM = 1
MEMBERSHIP_STREAM = 2


class ScenarioServiceError(RuntimeError):
    """Raised when a scenario cannot be constructed."""


class ScenarioParameterError(ScenarioServiceError):
    """Raised when ratio, counts or task split parameters are out of range."""


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def default_base_classes(num_classes: int) -> int:
    """Half of the classes, rounded up."""

    return (num_classes + 1) // 2


def task_class_splits(num_classes: int, num_tasks: int, base_classes: Optional[int] = None) -> List[int]:
    """Return the number of classes per task: a base task then equal splits.

    When the remainder does not divide evenly the earliest non-base tasks take one
    extra class each.
    """

    if num_tasks < 1:
        raise ScenarioParameterError("num_tasks debe ser >= 1.")
    if num_tasks == 1:
        return [num_classes]
    base = default_base_classes(num_classes) if base_classes is None else base_classes
    if base < 1 or base > num_classes:
        raise ScenarioParameterError(f"base_classes={base} fuera de [1, {num_classes}].")
    remaining = num_classes - base
    if remaining < num_tasks - 1:
        raise ScenarioParameterError(
            f"No hay clases suficientes: {remaining} clases restantes para {num_tasks - 1} tareas."
        )
    share, extra = divmod(remaining, num_tasks - 1)
    return [base] + [share + (1 if task < extra else 0) for task in range(num_tasks - 1)]


class ScenarioService:
    """Construct ordered, shuffled and conventional task sequences."""

    def make_profile(self, num_classes: int, n_max: int, rho: float) -> ImbalanceProfile:
        """``counts[c] = max(1, round_half_up(n_max * rho ** (c / (C - 1))))``."""

        if not 0.0 < rho <= 1.0:
            raise ScenarioParameterError(f"rho={rho} debe estar en (0, 1].")
        if num_classes < 1 or n_max < 1:
            raise ScenarioParameterError("num_classes y n_max deben ser >= 1.")
        if num_classes == 1:
            return ImbalanceProfile(rho=rho, nMax=n_max, counts=[n_max])
        counts = [
            max(1, round_half_up(n_max * rho ** (rank / (num_classes - 1))))
            for rank in range(num_classes)
        ]
        return ImbalanceProfile(rho=rho, nMax=n_max, counts=counts)

    def _subsample(self, dataset: Dataset, class_counts: Dict[int, int], seed: int) -> Dict[int, List[int]]:
        """Keep a seeded uniform choice of ``class_counts[c]`` examples per class."""

        survivors: Dict[int, List[int]] = {}
        for class_id in sorted(class_counts):
            pool = dataset.perClassIndex.get(class_id, [])
            required = class_counts[class_id]
            if len(pool) < required:
                raise InsufficientSamplesError(class_id, len(pool), required)
            rng = np.random.default_rng([seed, SUBSAMPLE_STREAM, class_id])
            chosen = rng.choice(len(pool), size=required, replace=False)
            survivors[class_id] = [pool[position] for position in sorted(chosen)]
        return survivors

    def _check_profile(self, dataset: Dataset, profile: ImbalanceProfile) -> None:
        if dataset.numClasses < profile.numClasses:
            raise ScenarioParameterError(
                f"El conjunto tiene {dataset.numClasses} clases y el perfil requiere {profile.numClasses}."
            )

    def _assemble(
        self,
        dataset: Dataset,
        profile: ImbalanceProfile,
        class_order: List[int],
        rank_order: List[int],
        num_tasks: int,
        base_classes: Optional[int],
        seed: int,
        kind: ScenarioKind,
    ) -> TaskSequence:
        splits = task_class_splits(len(class_order), num_tasks, base_classes)
        class_counts = {class_id: profile.counts[rank] for rank, class_id in enumerate(rank_order)}
        survivors = self._subsample(dataset, class_counts, seed)

        tasks: List[TaskDTO] = []
        cursor = 0
        for task_number, width in enumerate(splits, start=1):
            class_ids = class_order[cursor:cursor + width]
            cursor += width
            example_ids = [index for class_id in class_ids for index in survivors[class_id]]
            tasks.append(TaskDTO(taskId=task_number, classIds=list(class_ids), exampleIndices=example_ids))

        logger.info(
            "Escenario %s construido: %s tareas %s, %s ejemplos de entrenamiento",
            kind.value,
            len(tasks),
            splits,
            sum(len(task.exampleIndices) for task in tasks),
        )
        return TaskSequence(
            tasks=tasks,
            scenarioKind=kind,
            classOrder=list(class_order),
            seed=seed,
            rankOrder=list(rank_order),
            classCounts=class_counts,
            profile=profile,
        )

    def _rank_classes(self, dataset: Dataset, profile: ImbalanceProfile, seed: int) -> List[int]:
        """Seeded permutation of dataset classes truncated to the profile length."""

        rng = np.random.default_rng([seed, RANK_STREAM])
        permutation = rng.permutation(dataset.numClasses)
        return [int(class_id) for class_id in permutation[:profile.numClasses]]

    def build_ordered(
        self,
        dataset: Dataset,
        profile: ImbalanceProfile,
        num_tasks: int,
        base_classes: Optional[int],
        seed: int,
    ) -> TaskSequence:
        """Tasks arrive from the most to the least frequent classes.

        Classes with equal counts are ordered by ascending class id.
        """

        self._check_profile(dataset, profile)
        ranked = self._rank_classes(dataset, profile, seed)
        counts = {class_id: profile.counts[rank] for rank, class_id in enumerate(ranked)}
        rank_order = sorted(ranked, key=lambda class_id: (-counts[class_id], class_id))
        return self._assemble(
            dataset, profile, rank_order, rank_order, num_tasks, base_classes, seed, ScenarioKind.ORDERED
        )

    def build_shuffled(
        self,
        dataset: Dataset,
        profile: ImbalanceProfile,
        num_tasks: int,
        base_classes: Optional[int],
        seed: int,
        kind: ScenarioKind = ScenarioKind.SHUFFLED,
    ) -> TaskSequence:
        """Counts go to classes by one seeded permutation, task membership by a second one."""

        self._check_profile(dataset, profile)
        rank_order = self._rank_classes(dataset, profile, seed)
        rng = np.random.default_rng([seed, MEMBERSHIP_STREAM])
        class_order = [int(class_id) for class_id in rng.permutation(rank_order)]
        return self._assemble(dataset, profile, class_order, rank_order, num_tasks, base_classes, seed, kind)

    def build_conventional(
        self,
        dataset: Dataset,
        num_tasks: int,
        base_classes: Optional[int],
        per_class: int,
        seed: int,
    ) -> TaskSequence:
        """Balanced CIL: the shuffled construction with ``rho = 1``."""

        profile = self.make_profile(dataset.numClasses, per_class, 1.0)
        return self.build_shuffled(
            dataset, profile, num_tasks, base_classes, seed, kind=ScenarioKind.CONVENTIONAL
        )

    def build(
        self,
        kind: ScenarioKind,
        dataset: Dataset,
        rho: float,
        n_max: int,
        num_tasks: int,
        base_classes: Optional[int],
        seed: int,
    ) -> TaskSequence:
        """Dispatch on ``kind`` using a profile over every dataset class."""

        if kind is ScenarioKind.CONVENTIONAL:
            return self.build_conventional(dataset, num_tasks, base_classes, n_max, seed)
        profile = self.make_profile(dataset.numClasses, n_max, rho)
        if kind is ScenarioKind.ORDERED:
            return self.build_ordered(dataset, profile, num_tasks, base_classes, seed)
        return self.build_shuffled(dataset, profile, num_tasks, base_classes, seed)

    @staticmethod
    def to_manifest(sequence: TaskSequence) -> Dict[str, object]:
        """Serialize a sequence as ``task id -> class ids -> example ids`` for external trainers."""

        return {
            "scenario_kind": sequence.scenarioKind.value,
            "seed": sequence.seed,
            "rho": sequence.profile.rho if sequence.profile else None,
            "class_order": list(sequence.classOrder),
            "rank_order": list(sequence.rankOrder),
            "class_counts": {str(class_id): count for class_id, count in sorted(sequence.classCounts.items())},
            "tasks": [
                {
                    "task_id": task.taskId,
                    "class_ids": list(task.classIds),
                    "example_indices": list(task.exampleIndices),
                }
                for task in sequence.tasks
            ],
        }
