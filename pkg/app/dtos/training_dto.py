"""Data transfer objects for training configuration and loss reporting."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List


class AuxKind(str, Enum):
    """Enumerate the auxiliary anti-forgetting losses."""

    NONE = "none"
    LOGIT_DISTILL = "logit_distill"
    FEATURE_DISTILL = "feature_distill"


@dataclass
class AuxConfig:
    """Select the auxiliary loss and its hyper-parameters."""

    kind: AuxKind = AuxKind.NONE
    temperature: float = 2.0
    lambdaBase: float = 5.0


@dataclass
class TrainConfig:
    """Two-stage training schedule.

    Stage 1 divides ``lrStage1`` by 10 at every epoch listed in ``milestones``;
    stage 2 uses the constant ``lrStage2``.
    """

    epochsStage1: int = 30
    epochsStage2: int = 30
    lrStage1: float = 0.1
    milestones: List[int] = field(default_factory=lambda: [20, 25])
    lrStage2: float = 0.1
    momentum: float = 0.9
    weightDecay: float = 0.0
    batchSize: int = 32
    aux: AuxConfig = field(default_factory=AuxConfig)
    freezeOldHeads: bool = True
    useLws: bool = True
    seed: int = 0

    def lr_at(self, epoch: int) -> float:
        """Return the stage-1 learning rate for a 0-based epoch."""

        decays = sum(1 for milestone in self.milestones if epoch >= milestone)
        return self.lrStage1 / (10.0 ** decays)


@dataclass
class LossReport:
    """Epoch-averaged loss terms; ``total`` is always ``ce + aux``."""

    ce: float
    aux: float
    total: float

    @classmethod
    def of(cls, ce: float, aux: float) -> "LossReport":
        return cls(ce=ce, aux=aux, total=ce + aux)
