"""Data transfer objects for long-tailed profiles and task sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List


class ScenarioKind(str, Enum):
    """Enumerate the supported task-sequence constructions."""

    ORDERED = "ordered"
    SHUFFLED = "shuffled"
    CONVENTIONAL = "conventional"


@dataclass
class ImbalanceProfile:
    """Per-rank sample counts induced by the imbalance ratio (rank 0 = most frequent)."""

    rho: float
    nMax: int
    counts: List[int]

    @property
    def numClasses(self) -> int:
        return len(self.counts)


@dataclass
class TaskDTO:
    """Represent one task: its class ids and the training example ids it exposes."""

    taskId: int
    classIds: List[int]
    exampleIndices: List[int]


@dataclass
class TaskSequence:
    """Ordered tasks plus the bookkeeping needed to audit the long-tailed construction.

    ``classOrder`` lists classes in the order the tasks introduce them. ``rankOrder``
    lists the same classes by frequency rank (rank 0 first) and ``classCounts`` gives
    the surviving training count of every used class.
    """

    tasks: List[TaskDTO]
    scenarioKind: ScenarioKind
    classOrder: List[int]
    seed: int
    rankOrder: List[int] = field(default_factory=list)
    classCounts: Dict[int, int] = field(default_factory=dict)
    profile: ImbalanceProfile | None = None

    @property
    def numTasks(self) -> int:
        return len(self.tasks)

    def all_example_indices(self) -> List[int]:
        return [index for task in self.tasks for index in task.exampleIndices]
