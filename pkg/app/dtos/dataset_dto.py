"""Data transfer objects describing labeled datasets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import numpy as np


@dataclass(frozen=True, eq=False)
class LabeledExample:
    """Represent a single example with its stable dataset-wide index."""

    features: np.ndarray
    label: int
    index: int


@dataclass(eq=False)
class Dataset:
    """Hold features, labels and stable example ids as row-aligned arrays.

    ``perClassIndex`` maps every class id in ``[0, numClasses)`` to the ascending list of
    example ids carrying that label (possibly empty).
    """

    features: np.ndarray
    labels: np.ndarray
    indices: np.ndarray
    numClasses: int
    featureDim: int
    perClassIndex: Dict[int, List[int]] = field(init=False)
    _rows: Dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1, self.featureDim)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if not (len(self.features) == len(self.labels) == len(self.indices)):
            raise ValueError("features, labels e indices deben tener la misma longitud.")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.numClasses):
            raise ValueError("Existen etiquetas fuera de [0, numClasses).")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("Las características deben ser finitas.")
        self._rows = {int(index): row for row, index in enumerate(self.indices)}
        if len(self._rows) != len(self.indices):
            raise ValueError("Los índices de ejemplo deben ser únicos.")
        self.perClassIndex = {label: [] for label in range(self.numClasses)}
        order = np.argsort(self.indices, kind="stable")
        for row in order:
            self.perClassIndex[int(self.labels[row])].append(int(self.indices[row]))

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def examples(self) -> List[LabeledExample]:
        """Materialize the dataset as a list of ``LabeledExample`` in row order."""

        return [
            LabeledExample(self.features[row].copy(), int(self.labels[row]), int(self.indices[row]))
            for row in range(len(self.indices))
        ]

    def rows_for(self, example_ids: Iterable[int]) -> np.ndarray:
        """Translate example ids into row positions."""

        return np.array([self._rows[int(index)] for index in example_ids], dtype=np.int64)

    def features_for(self, example_ids: Iterable[int]) -> np.ndarray:
        return self.features[self.rows_for(example_ids)].reshape(-1, self.featureDim)

    def labels_for(self, example_ids: Iterable[int]) -> np.ndarray:
        return self.labels[self.rows_for(example_ids)]

    def subset(self, example_ids: Iterable[int]) -> "Dataset":
        """Return a dataset restricted to ``example_ids`` keeping ids and class count."""

        rows = self.rows_for(example_ids)
        return Dataset(
            features=self.features[rows].reshape(-1, self.featureDim),
            labels=self.labels[rows],
            indices=self.indices[rows],
            numClasses=self.numClasses,
            featureDim=self.featureDim,
        )
