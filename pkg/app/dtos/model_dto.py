"""Data transfer objects describing the incremental classifier state."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - solo para anotaciones
    from app.services.numerics_service import ParamSet


LWS_PARAM = "lws"
COSINE_SCALE_PARAM = "eta"


class HeadKind(str, Enum):
    """Enumerate classifier head variants."""

    LINEAR = "linear"
    COSINE = "cosine"


@dataclass(eq=False)
class IncrementalModel:
    """Shared extractor, per-task heads and the optional scaling vector.

    Parameters live in one ``ParamSet``: ``extractor.W{i}``/``extractor.b{i}``,
    ``head{t}.W`` (and ``head{t}.b`` for linear heads), ``eta`` for cosine heads and
    ``lws`` while the scaling layer exists. ``classIds[j]`` is the class of logit column j.
    """

    params: "ParamSet"
    architecture: List[int]
    headKind: HeadKind = HeadKind.LINEAR
    headWidths: List[int] = field(default_factory=list)
    classIds: List[int] = field(default_factory=list)
    classMeans: Dict[int, np.ndarray] = field(default_factory=dict)
    cosineScaleInit: float = 10.0

    @property
    def featureDim(self) -> int:
        return self.architecture[-1]

    @property
    def numClasses(self) -> int:
        return sum(self.headWidths)

    @property
    def numHeads(self) -> int:
        return len(self.headWidths)

    @property
    def hasLws(self) -> bool:
        return LWS_PARAM in self.params

    @property
    def lws(self) -> Optional[np.ndarray]:
        return self.params.value(LWS_PARAM) if self.hasLws else None

    def column_of(self) -> Dict[int, int]:
        """Map class id -> logit column."""

        return {class_id: column for column, class_id in enumerate(self.classIds)}

    def head_slice(self, head: int) -> slice:
        start = sum(self.headWidths[:head])
        return slice(start, start + self.headWidths[head])
