"""Tests for the CSV dataset reader and writer."""

from pathlib import Path
import sys

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[2]))

from app.daos.dataset_dao import (
    DatasetDAO,
    DatasetDAOError,
    DatasetFormatError,
    DatasetParseError,
    EmptyDatasetError,
)
from app.services.data_service import DataService


def test_load_csv_parses_labels_and_features(tmp_path: Path) -> None:
    """Two lines give two examples, two classes and dimension two."""

    path = tmp_path / "datos.csv"
    path.write_text("0,1.0,2.0\n1,3.0,4.0", encoding="utf-8")
    dataset = DatasetDAO().load_csv(path)
    assert len(dataset) == 2
    assert dataset.numClasses == 2
    assert dataset.featureDim == 2
    assert dataset.indices.tolist() == [0, 1]
    assert np.array_equal(dataset.features_for([1]), [[3.0, 4.0]])


def test_load_csv_rejects_empty_file(tmp_path: Path) -> None:
    """An empty file is an empty-dataset error."""

    path = tmp_path / "vacio.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(EmptyDatasetError):
        DatasetDAO().load_csv(path)


def test_load_csv_reports_the_malformed_line(tmp_path: Path) -> None:
    """A non-numeric value carries its 1-based line number."""

    path = tmp_path / "roto.csv"
    path.write_text("0,1.0\n1,abc\n", encoding="utf-8")
    with pytest.raises(DatasetParseError) as error:
        DatasetDAO().load_csv(path)
    assert error.value.lineNumber == 2


def test_load_csv_rejects_dimension_mismatch_and_label_gaps(tmp_path: Path) -> None:
    """Rows of different widths and non-dense labels are format errors."""

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("0,1.0,2.0\n1,3.0\n", encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        DatasetDAO().load_csv(ragged)
    with pytest.raises(DatasetFormatError):
        DatasetDAO().load_csv(ragged, expected_dim=3)
    gaps = tmp_path / "gaps.csv"
    gaps.write_text("0,1.0\n2,3.0\n", encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        DatasetDAO().load_csv(gaps)


def test_save_then_load_reproduces_the_dataset(tmp_path: Path) -> None:
    """Saving with 17 significant digits and reloading is exact."""

    dataset = DataService().generate_synthetic(3, 7, 5, 0.4, seed=8)
    dao = DatasetDAO()
    path = dao.save_csv(dataset, tmp_path / "salida" / "datos.csv")
    reloaded = dao.load_csv(path)
    assert np.array_equal(reloaded.features, dataset.features)
    assert np.array_equal(reloaded.labels, dataset.labels)
    assert reloaded.numClasses == dataset.numClasses


def test_load_csv_reports_undecodable_bytes_as_dao_error(tmp_path: Path) -> None:
    """A file that is not UTF-8 raises the DAO error instead of a decoding error."""

    path = tmp_path / "binario.csv"
    path.write_bytes(b"1,\xff\xfe,4.0\n")
    with pytest.raises(DatasetDAOError):
        DatasetDAO().load_csv(path)


def test_load_csv_counts_blank_and_crlf_lines(tmp_path: Path) -> None:
    """Windows line endings and blank lines keep physical line numbers in errors."""

    path = tmp_path / "crlf.csv"
    path.write_bytes(b"0, 1.0 ,2.0\r\n\r\n1,x,3.0\r\n")
    with pytest.raises(DatasetParseError) as error:
        DatasetDAO().load_csv(path)
    assert error.value.lineNumber == 3
    path.write_bytes(b"0, 1.0 ,2.0\r\n\r\n1,3.0,4.0\r\n")
    dataset = DatasetDAO().load_csv(path)
    assert dataset.labels.tolist() == [0, 1]
    assert np.array_equal(dataset.features_for([0]), [[1.0, 2.0]])
