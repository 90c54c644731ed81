"""Data transfer objects for the experiment configuration file."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from app.dtos.memory_dto import BudgetMode, SelectionKind
from app.dtos.model_dto import HeadKind
from app.dtos.scenario_dto import ScenarioKind
from app.dtos.training_dto import TrainConfig


class DatasetKind(str, Enum):
    """Enumerate dataset sources."""

    SYNTHETIC = "synthetic"
    CSV = "csv"


class Strategy(str, Enum):
    """Enumerate anti-forgetting strategy adapters."""

    REPLAY = "replay"
    LWF = "lwf"
    LUCIR = "lucir"


class Predictor(str, Enum):
    """Enumerate how predictions are produced at evaluation time."""

    SCALED = "scaled"
    PLAIN = "plain"
    NCM = "ncm"


class SweepAxis(str, Enum):
    """Enumerate the configuration fields a sweep may vary."""

    RHO = "rho"
    MEMORY_BUDGET = "memory_budget"
    EXEMPLARS_PER_CLASS = "exemplars_per_class"
    NUM_TASKS = "num_tasks"
    SEED = "seed"


@dataclass
class DatasetSpec:
    """Synthetic generator parameters or a CSV path, plus the balanced test split size."""

    kind: DatasetKind = DatasetKind.SYNTHETIC
    numClasses: int = 20
    perClass: int = 250
    featureDim: int = 16
    clusterSpread: float = 0.35
    radius: float = 1.0
    testPerClass: int = 50
    csvPath: Optional[str] = None


@dataclass
class ScenarioSpec:
    """Long-tailed task sequence construction. ``baseClasses`` defaults to ceil(C/2)."""

    kind: ScenarioKind = ScenarioKind.SHUFFLED
    rho: float = 0.01
    nMax: int = 200
    numTasks: int = 5
    baseClasses: Optional[int] = None


@dataclass
class MemorySpec:
    """Exemplar memory budget and selection rule."""

    mode: BudgetMode = BudgetMode.PER_CLASS
    budget: int = 10
    selection: SelectionKind = SelectionKind.HERDING


@dataclass
class ModelSpec:
    """Extractor hidden layer sizes and head variant; ``headKind`` unset follows the strategy."""

    hiddenLayers: List[int] = field(default_factory=lambda: [64, 32])
    headKind: Optional[HeadKind] = None
    cosineScale: float = 10.0


@dataclass
class ExperimentConfig:
    """Fully validated experiment description."""

    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    memory: MemorySpec = field(default_factory=MemorySpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    strategy: Strategy = Strategy.REPLAY
    twoStage: bool = True
    predictor: Predictor = Predictor.SCALED
    seeds: List[int] = field(default_factory=lambda: [0])
    outputDir: str = "runs"
    saveCheckpoints: bool = False
