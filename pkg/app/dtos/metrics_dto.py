"""Data transfer objects for evaluations and complete run logs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from app.dtos.training_dto import LossReport


@dataclass
class TaskEval:
    """Per-class accuracies over the classes seen after ``taskId``.

    ``exampleIndices``/``labels``/``predictions`` keep the raw predictions so every
    metric can be recomputed from a persisted dump.
    """

    taskId: int
    perClassAccuracy: Dict[int, float]
    averageAccuracy: float
    numSeenClasses: int
    headMean: Optional[float] = None
    tailMean: Optional[float] = None
    exampleIndices: List[int] = field(default_factory=list)
    labels: List[int] = field(default_factory=list)
    predictions: List[int] = field(default_factory=list)


@dataclass
class HeadTailBreakdown:
    """Mean per-class accuracy of the frequent and the rare half of seen classes."""

    headMean: float
    tailMean: float


@dataclass
class TaskLossHistory:
    """Loss reports recorded while learning one task."""

    taskId: int
    stage1: List[LossReport] = field(default_factory=list)
    stage2: List[LossReport] = field(default_factory=list)


@dataclass
class RunLog:
    """Everything recorded for one seed of one experiment."""

    config: Dict[str, Any]
    seed: int
    taskEvals: List[TaskEval] = field(default_factory=list)
    averageIncrementalAccuracy: Optional[float] = None
    lwsDump: Dict[int, Dict[int, float]] = field(default_factory=dict)
    memoryDump: Dict[int, List[int]] = field(default_factory=dict)
    lossHistory: List[TaskLossHistory] = field(default_factory=list)
    forgetting: Optional[float] = None
    wallTime: float = 0.0
    completed: bool = False
