"""Data access layer for plain-text CSV datasets (label first, then features)."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.dtos.dataset_dto import Dataset


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.17g}"


class DatasetDAOError(RuntimeError):
    """Raised when a dataset file cannot be read or written."""


class DatasetParseError(DatasetDAOError):
    """Raised when a line cannot be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"Línea {line_number}: {message}")
        self.lineNumber = line_number


class DatasetFormatError(DatasetDAOError):
    """Raised when the file parses but violates the dataset format (dimensions, label gaps)."""


class EmptyDatasetError(DatasetDAOError):
    """Raised when the file contains no examples."""


class DatasetDAO:
    """Read and write datasets as ``label,f1,...,fd`` rows with stable file-order ids."""

    def load_csv(self, path: Union[str, Path], expected_dim: Optional[int] = None) -> Dataset:
        """Parse ``path`` into a dataset with ``numClasses = max label + 1``."""

        source = Path(path)
        labels: List[int] = []
        rows: List[List[float]] = []
        dimension = expected_dim
        try:
            with source.open("r", encoding="utf-8", newline="") as handle:
                reader = csv.reader(handle)
                for tokens in reader:
                    line_number = reader.line_num
                    parsed = self._parse_row(tokens, line_number)
                    if parsed is None:
                        continue
                    label, values = parsed
                    if dimension is None:
                        dimension = len(values)
                    elif len(values) != dimension:
                        raise DatasetFormatError(
                            f"Línea {line_number}: se esperaban {dimension} características y se encontraron {len(values)}."
                        )
                    labels.append(label)
                    rows.append(values)
        except csv.Error as exc:
            raise DatasetParseError(f"CSV inválido ({exc})", reader.line_num) from exc
        except UnicodeDecodeError as exc:
            raise DatasetDAOError(f"El archivo de datos '{source}' no está codificado en UTF-8: {exc}") from exc
        except OSError as exc:
            raise DatasetDAOError(f"No fue posible leer el archivo de datos '{source}': {exc}") from exc

        if not labels:
            raise EmptyDatasetError(f"El archivo '{source}' no contiene ejemplos.")

        num_classes = max(labels) + 1
        missing = sorted(set(range(num_classes)) - set(labels))
        if missing:
            raise DatasetFormatError(f"Las clases deben ser densas; faltan las etiquetas {missing}.")

        logger.info("Cargados %s ejemplos de %s clases desde %s", len(labels), num_classes, source)
        return Dataset(
            features=np.array(rows, dtype=np.float64),
            labels=np.array(labels, dtype=np.int64),
            indices=np.arange(len(labels), dtype=np.int64),
            numClasses=num_classes,
            featureDim=int(dimension),
        )

    @staticmethod
    def _parse_row(tokens: Sequence[str], line_number: int) -> Optional[Tuple[int, List[float]]]:
        """Return ``(label, features)``; blank rows give ``None``."""

        tokens = [token.strip() for token in tokens]
        if not any(tokens):
            return None
        try:
            label = int(tokens[0])
        except ValueError as exc:
            raise DatasetParseError(f"etiqueta inválida '{tokens[0]}'", line_number) from exc
        if label < 0:
            raise DatasetParseError(f"etiqueta negativa {label}", line_number)
        try:
            values = [float(token) for token in tokens[1:]]
        except ValueError as exc:
            raise DatasetParseError(f"valor numérico inválido ({exc})", line_number) from exc
        if not values:
            raise DatasetParseError("la línea no contiene características", line_number)
        if not all(np.isfinite(values)):
            raise DatasetParseError("las características deben ser finitas", line_number)
        return label, values

    def save_csv(self, dataset: Dataset, path: Union[str, Path]) -> Path:
        """Write ``dataset`` in row order with 17 significant digits so reloads are exact."""

        destination = Path(path)
        try:
            destination.parent.mkdir(parents=True, exist_ok=True)
            with destination.open("w", encoding="utf-8", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                for row in range(len(dataset)):
                    writer.writerow(
                        [int(dataset.labels[row])] + [FLOAT_FORMAT.format(value) for value in dataset.features[row]]
                    )
        except OSError as exc:
            raise DatasetDAOError(f"No fue posible guardar el archivo de datos '{destination}': {exc}") from exc
        return destination
