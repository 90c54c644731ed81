"""Tests for synthetic generation and the balanced test split."""

from pathlib import Path
import sys

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[2]))

from app.services.data_service import DataService, DataServiceError, InsufficientSamplesError


def test_generate_synthetic_is_deterministic_and_counted() -> None:
    """The same seed yields bit-identical data with the requested counts."""

    service = DataService()
    first = service.generate_synthetic(10, 100, 4, 0.3, seed=11)
    second = service.generate_synthetic(10, 100, 4, 0.3, seed=11)
    assert len(first) == 1000
    assert all(len(ids) == 100 for ids in first.perClassIndex.values())
    assert np.array_equal(first.features, second.features)
    assert np.array_equal(first.labels, second.labels)


def test_generate_synthetic_example_depends_only_on_class_stream() -> None:
    """Example i of class c is unchanged when more classes or examples are generated."""

    service = DataService()
    small = service.generate_synthetic(3, 5, 4, 0.2, seed=2)
    large = service.generate_synthetic(6, 8, 4, 0.2, seed=2)
    for class_id in range(3):
        for position in range(5):
            small_row = small.features_for([class_id * 5 + position])
            large_row = large.features_for([class_id * 8 + position])
            assert np.array_equal(small_row, large_row)


def test_near_separable_clusters_are_solved_by_nearest_mean() -> None:
    """With spread 0.01 a one-nearest-mean classifier exceeds 99% accuracy."""

    service = DataService()
    dataset = service.generate_synthetic(10, 60, 8, 0.01, seed=5)
    train, test = service.split_train_test(dataset, 20, seed=6)
    means = np.stack([train.features_for(train.perClassIndex[c]).mean(axis=0) for c in range(10)])
    distances = np.linalg.norm(test.features[:, None, :] - means[None, :, :], axis=2)
    accuracy = float(np.mean(np.argmin(distances, axis=1) == test.labels))
    assert accuracy > 0.99


def test_generate_synthetic_rejects_bad_parameters() -> None:
    """Non-positive spread or counts are rejected."""

    service = DataService()
    with pytest.raises(DataServiceError):
        service.generate_synthetic(3, 5, 2, 0.0, seed=0)
    with pytest.raises(DataServiceError):
        service.generate_synthetic(0, 5, 2, 0.1, seed=0)


def test_split_train_test_counts_and_disjointness() -> None:
    """Twenty per class are held out and the two sides partition the ids."""

    service = DataService()
    dataset = service.generate_synthetic(10, 100, 3, 0.5, seed=1)
    train, test = service.split_train_test(dataset, 20, seed=4)
    assert len(test) == 200
    assert all(len(ids) == 20 for ids in test.perClassIndex.values())
    train_ids = set(train.indices.tolist())
    test_ids = set(test.indices.tolist())
    assert train_ids.isdisjoint(test_ids)
    assert train_ids | test_ids == set(dataset.indices.tolist())


def test_split_train_test_is_repeatable_and_zero_is_identity() -> None:
    """A fixed seed gives the same split; zero held out leaves the data untouched."""

    service = DataService()
    dataset = service.generate_synthetic(4, 12, 2, 0.5, seed=3)
    _, first = service.split_train_test(dataset, 3, seed=9)
    _, second = service.split_train_test(dataset, 3, seed=9)
    assert first.indices.tolist() == second.indices.tolist()
    train, test = service.split_train_test(dataset, 0, seed=9)
    assert train is dataset
    assert len(test) == 0


def test_split_train_test_names_the_small_class() -> None:
    """A class without enough examples raises an error naming it."""

    service = DataService()
    dataset = service.generate_synthetic(3, 4, 2, 0.5, seed=0)
    with pytest.raises(InsufficientSamplesError) as error:
        service.split_train_test(dataset, 4, seed=0)
    assert error.value.classId == 0
