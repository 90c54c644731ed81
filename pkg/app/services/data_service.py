"""Business logic to produce labeled datasets and the class-balanced test split."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from app.daos.dataset_dao import DatasetDAO
from app.dtos.dataset_dto import Dataset


logger = logging.getLogger(__name__)

DEFAULT_RADIUS = 1.0
MEAN_STREAM = 0
SAMPLE_STREAM = 1


class DataServiceError(RuntimeError):
    """Raised when a dataset cannot be generated or split."""


class InsufficientSamplesError(DataServiceError):
    """Raised when a class holds fewer examples than an operation requires."""

    def __init__(self, class_id: int, available: int, required: int) -> None:
        super().__init__(
            f"La clase {class_id} tiene {available} ejemplos y se requieren {required}."
        )
        self.classId = class_id
        self.available = available
        self.required = required


class DataService:
    """Generate synthetic Gaussian clusters, load CSV files and hold out balanced test sets."""

    def __init__(self, dataset_dao: Optional[DatasetDAO] = None) -> None:
        """Store the DAO used for file-backed datasets."""

        self._dataset_dao = dataset_dao or DatasetDAO()

    @staticmethod
    def class_mean(class_id: int, feature_dim: int, seed: int, radius: float = DEFAULT_RADIUS) -> np.ndarray:
        """Return the seeded unit direction of ``class_id`` scaled to ``radius``."""

        rng = np.random.default_rng([seed, class_id, MEAN_STREAM])
        direction = rng.standard_normal(feature_dim)
        norm = np.linalg.norm(direction)
        while norm == 0.0:  # pragma: no cover - probabilidad nula
            direction = rng.standard_normal(feature_dim)
            norm = np.linalg.norm(direction)
        return radius * direction / norm

    def generate_synthetic(
        self,
        num_classes: int,
        per_class: int,
        feature_dim: int,
        cluster_spread: float,
        seed: int,
        radius: float = DEFAULT_RADIUS,
    ) -> Dataset:
        """Draw ``per_class`` isotropic Gaussian samples around each class mean.

        Example ``i`` of class ``c`` is the i-th draw of the ``(seed, c)`` stream and gets id
        ``c * per_class + i``, so it depends only on ``(seed, c, i)``.
        """

        if min(num_classes, per_class, feature_dim) < 1:
            raise DataServiceError("num_classes, per_class y feature_dim deben ser >= 1.")
        if cluster_spread <= 0:
            raise DataServiceError("cluster_spread debe ser positivo.")
        if feature_dim == 1 and num_classes > 2:
            raise DataServiceError("Con una sola dimensión solo existen dos direcciones distintas.")

        means = np.stack([self.class_mean(c, feature_dim, seed, radius) for c in range(num_classes)])
        for c in range(1, num_classes):
            if np.any(np.all(means[:c] == means[c], axis=1)):
                raise DataServiceError(f"La media de la clase {c} coincide con otra clase.")

        features = np.empty((num_classes * per_class, feature_dim))
        labels = np.repeat(np.arange(num_classes), per_class)
        for c in range(num_classes):
            rng = np.random.default_rng([seed, c, SAMPLE_STREAM])
            block = means[c] + cluster_spread * rng.standard_normal((per_class, feature_dim))
            features[c * per_class:(c + 1) * per_class] = block

        logger.info(
            "Generado conjunto sintético: %s clases x %s ejemplos, dimensión %s, dispersión %s",
            num_classes,
            per_class,
            feature_dim,
            cluster_spread,
        )
        return Dataset(
            features=features,
            labels=labels,
            indices=np.arange(num_classes * per_class),
            numClasses=num_classes,
            featureDim=feature_dim,
        )

    def load_csv(self, path: Union[str, Path], expected_dim: Optional[int] = None) -> Dataset:
        """Delegate CSV parsing to the dataset DAO."""

        return self._dataset_dao.load_csv(path, expected_dim)

    def save_csv(self, dataset: Dataset, path: Union[str, Path]) -> Path:
        return self._dataset_dao.save_csv(dataset, path)

    def split_train_test(self, dataset: Dataset, test_per_class: int, seed: int) -> Tuple[Dataset, Dataset]:
        """Hold out exactly ``test_per_class`` seeded examples of every class."""

        if test_per_class < 0:
            raise DataServiceError("test_per_class no puede ser negativo.")
        if test_per_class == 0:
            return dataset, dataset.subset([])

        test_ids = []
        for class_id in range(dataset.numClasses):
            pool = dataset.perClassIndex[class_id]
            if len(pool) <= test_per_class:
                raise InsufficientSamplesError(class_id, len(pool), test_per_class + 1)
            rng = np.random.default_rng([seed, class_id])
            chosen = rng.choice(len(pool), size=test_per_class, replace=False)
            test_ids.extend(pool[position] for position in sorted(chosen))

        held_out = set(test_ids)
        train_ids = [int(index) for index in dataset.indices if int(index) not in held_out]
        return dataset.subset(train_ids), dataset.subset(sorted(held_out))
