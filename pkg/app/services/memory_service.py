"""Business logic for the bounded exemplar replay memory."""

from __future__ import annotations

import logging
from typing import Callable, List, Sequence

import numpy as np

from app.dtos.dataset_dto import Dataset
from app.dtos.memory_dto import BudgetMode, ExemplarMemory, SelectionKind


logger = logging.getLogger(__name__)

FeatureFunction = Callable[[np.ndarray], np.ndarray]


class MemoryServiceError(RuntimeError):
    """Raised when the exemplar memory cannot be updated."""


class MemoryParameterError(MemoryServiceError):
    """Raised for invalid budgets or class bookkeeping."""


def per_class_budget(capacity: int, num_seen_classes: int) -> int:
    """``floor(capacity / num_seen_classes)``."""

    if num_seen_classes < 1:
        raise MemoryParameterError("Se requiere al menos una clase vista para repartir la memoria.")
    if capacity < 0:
        raise MemoryParameterError("La capacidad de memoria no puede ser negativa.")
    return capacity // num_seen_classes


def select_herding(class_examples: Sequence[int], features: np.ndarray, k: int) -> List[int]:
    """Greedy herding: each pick keeps the running mean of picks closest to the class mean.

    Returns up to ``k`` ids in pick order; ties go to the earliest position.
    """

    available = len(class_examples)
    if k > available:
        logger.warning("Herding: se pidieron %s ejemplares y solo hay %s; se truncará", k, available)
        k = available
    if k <= 0:
        return []
    if features.shape[0] != available:
        raise MemoryParameterError("Las características deben estar alineadas con los ejemplos.")

    class_mean = features.mean(axis=0)
    remaining = list(range(available))
    running_sum = np.zeros(features.shape[1])
    picks: List[int] = []
    for step in range(1, k + 1):
        candidates = features[remaining]
        candidate_means = (running_sum + candidates) / step
        distances = np.linalg.norm(class_mean - candidate_means, axis=1)
        best = int(np.argmin(distances))
        position = remaining.pop(best)
        running_sum = running_sum + features[position]
        picks.append(int(class_examples[position]))
    return picks


def select_random(class_examples: Sequence[int], k: int, rng: np.random.Generator) -> List[int]:
    """Seeded uniform choice without replacement, returned in ascending id order."""

    k = min(k, len(class_examples))
    if k <= 0:
        return []
    chosen = rng.choice(len(class_examples), size=k, replace=False)
    return [int(class_examples[position]) for position in sorted(chosen)]


class MemoryService:
    """Maintain an ``ExemplarMemory`` across tasks."""

    def create(
        self,
        mode: BudgetMode,
        budget: int,
        selection: SelectionKind = SelectionKind.HERDING,
        seed: int = 0,
    ) -> ExemplarMemory:
        if budget < 0:
            raise MemoryParameterError("El presupuesto de memoria no puede ser negativo.")
        return ExemplarMemory(mode=mode, budget=budget, selection=selection, seed=seed)

    def budget_for(self, memory: ExemplarMemory, seen_classes: int) -> int:
        if memory.mode is BudgetMode.PER_CLASS:
            return memory.budget
        return per_class_budget(memory.budget, seen_classes)

    def _shrink(self, memory: ExemplarMemory, budget: int, seen_classes: int) -> None:
        for class_id in sorted(memory.store):
            current = memory.store[class_id]
            if len(current) <= budget:
                continue
            if memory.selection is SelectionKind.HERDING:
                memory.store[class_id] = current[:budget]
            else:
                rng = np.random.default_rng([memory.seed, class_id, seen_classes])
                chosen = sorted(rng.choice(len(current), size=budget, replace=False))
                memory.store[class_id] = [current[position] for position in chosen]

    def update_after_task(
        self,
        memory: ExemplarMemory,
        new_task_data: Dataset,
        extractor: FeatureFunction,
        seen_classes: int,
    ) -> ExemplarMemory:
        """Re-budget old classes and select exemplars for every class present in ``new_task_data``."""

        new_classes = [label for label, ids in new_task_data.perClassIndex.items() if ids]
        already = [label for label in new_classes if label in memory.store]
        if already:
            raise MemoryParameterError(f"Las clases {already} ya tienen ejemplares en memoria.")

        budget = self.budget_for(memory, seen_classes)
        if budget == 0:
            logger.warning("Presupuesto por clase igual a cero con %s clases vistas: no habrá repetición", seen_classes)
        self._shrink(memory, budget, seen_classes)

        for class_id in sorted(new_classes):
            pool = new_task_data.perClassIndex[class_id]
            if memory.selection is SelectionKind.HERDING:
                features = extractor(new_task_data.features_for(pool))
                memory.store[class_id] = select_herding(pool, features, min(budget, len(pool)))
            else:
                rng = np.random.default_rng([memory.seed, class_id])
                memory.store[class_id] = select_random(pool, budget, rng)

        logger.info(
            "Memoria actualizada: %s clases, %s por clase, %s ejemplares en total",
            len(memory.store),
            budget,
            memory.total_stored(),
        )
        return memory

    @staticmethod
    def replay_dataset(memory: ExemplarMemory, source: Dataset) -> Dataset:
        """Return the stored exemplars as a dataset slice of ``source``."""

        return source.subset(memory.all_indices())
