"""Tests for long-tailed profiles and task sequence construction."""

from collections import Counter
from decimal import ROUND_HALF_UP, Decimal, localcontext
from pathlib import Path
import sys

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[2]))

from app.dtos.dataset_dto import Dataset
from app.dtos.scenario_dto import ScenarioKind, TaskSequence
from app.services.data_service import InsufficientSamplesError
from app.services.scenario_service import ScenarioParameterError, ScenarioService, task_class_splits


def _dataset(num_classes: int, per_class: int) -> Dataset:
    rng = np.random.default_rng(0)
    labels = np.repeat(np.arange(num_classes), per_class)
    return Dataset(rng.standard_normal((len(labels), 2)), labels, np.arange(len(labels)), num_classes, 2)


def _task_counts(sequence: TaskSequence):
    return [[sequence.classCounts[class_id] for class_id in task.classIds] for task in sequence.tasks]


def _assert_well_formed(sequence: TaskSequence, dataset: Dataset) -> None:
    seen_classes = [class_id for task in sequence.tasks for class_id in task.classIds]
    assert len(seen_classes) == len(set(seen_classes))
    assert sorted(seen_classes) == sorted(sequence.classOrder)
    example_ids = sequence.all_example_indices()
    assert len(example_ids) == len(set(example_ids))
    for task in sequence.tasks:
        labels = set(dataset.labels_for(task.exampleIndices).tolist())
        assert labels <= set(task.classIds)
        for class_id in task.classIds:
            count = sum(1 for label in dataset.labels_for(task.exampleIndices) if label == class_id)
            assert count == sequence.classCounts[class_id]


def test_profile_matches_high_precision_oracle() -> None:
    """Every rank of the 100-class, rho=0.01 profile agrees with decimal arithmetic."""

    profile = ScenarioService().make_profile(100, 500, 0.01)
    expected = []
    with localcontext() as context:
        context.prec = 50
        for rank in range(100):
            value = Decimal(500) * Decimal("0.01") ** (Decimal(rank) / Decimal(99))
            expected.append(max(1, int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))))
    assert profile.counts == expected
    assert profile.counts[0] == 500
    assert profile.counts[50] == 49
    assert profile.counts[99] == 5
    assert all(a >= b for a, b in zip(profile.counts, profile.counts[1:]))


def test_profile_ratio_one_is_flat_and_bad_ratio_is_rejected() -> None:
    """rho=1 gives n_max everywhere; rho outside (0, 1] raises."""

    service = ScenarioService()
    assert service.make_profile(7, 40, 1.0).counts == [40] * 7
    assert service.make_profile(1, 40, 0.1).counts == [40]
    for rho in (0.0, 1.5, -0.2):
        with pytest.raises(ScenarioParameterError):
            service.make_profile(10, 40, rho)


def test_task_class_splits_base_and_remainder() -> None:
    """Half the classes go first and leftovers go to the earliest later tasks."""

    assert task_class_splits(100, 6, 50) == [50, 10, 10, 10, 10, 10]
    assert task_class_splits(100, 6) == [50, 10, 10, 10, 10, 10]
    assert task_class_splits(10, 4, 3) == [3, 3, 2, 2]
    assert task_class_splits(9, 1) == [9]
    with pytest.raises(ScenarioParameterError):
        task_class_splits(5, 5, 3)


def test_ordered_sequence_is_monotone_in_counts() -> None:
    """Each task's smallest class count is at least every later task's largest."""

    service = ScenarioService()
    dataset = _dataset(20, 30)
    profile = service.make_profile(20, 30, 0.1)
    sequence = service.build_ordered(dataset, profile, 4, None, seed=3)
    assert [len(task.classIds) for task in sequence.tasks] == [10, 4, 3, 3]
    counts = _task_counts(sequence)
    for earlier, later in zip(counts, counts[1:]):
        assert min(earlier) >= max(later)
    _assert_well_formed(sequence, dataset)


def test_ordered_single_task_keeps_long_tail() -> None:
    """One task holds every class with the long-tailed counts."""

    service = ScenarioService()
    dataset = _dataset(6, 20)
    profile = service.make_profile(6, 20, 0.1)
    sequence = service.build_ordered(dataset, profile, 1, None, seed=0)
    assert len(sequence.tasks) == 1
    assert sorted(_task_counts(sequence)[0], reverse=True) == profile.counts


def test_shuffled_sequence_preserves_count_multiset() -> None:
    """All profile counts are used exactly once and seeds change the order."""

    service = ScenarioService()
    dataset = _dataset(20, 30)
    profile = service.make_profile(20, 30, 0.1)
    first = service.build_shuffled(dataset, profile, 4, None, seed=1)
    second = service.build_shuffled(dataset, profile, 4, None, seed=2)
    assert Counter(first.classCounts.values()) == Counter(profile.counts)
    assert first.classOrder != second.classOrder
    _assert_well_formed(first, dataset)


def test_flat_profile_makes_ordered_and_shuffled_counts_agree() -> None:
    """With rho=1 every task has the same count multiset in both constructions."""

    service = ScenarioService()
    dataset = _dataset(10, 15)
    profile = service.make_profile(10, 15, 1.0)
    ordered = service.build_ordered(dataset, profile, 3, None, seed=4)
    shuffled = service.build_shuffled(dataset, profile, 3, None, seed=4)
    assert [Counter(counts) for counts in _task_counts(ordered)] == [
        Counter(counts) for counts in _task_counts(shuffled)
    ]


def test_conventional_equals_flat_shuffled() -> None:
    """Balanced CIL is the shuffled construction at rho=1."""

    service = ScenarioService()
    dataset = _dataset(10, 100)
    conventional = service.build_conventional(dataset, 5, 2, 100, seed=7)
    shuffled = service.build_shuffled(dataset, service.make_profile(10, 100, 1.0), 5, 2, seed=7)
    assert conventional.scenarioKind is ScenarioKind.CONVENTIONAL
    assert [len(task.exampleIndices) for task in conventional.tasks] == [200] * 5
    assert [task.classIds for task in conventional.tasks] == [task.classIds for task in shuffled.tasks]
    assert [task.exampleIndices for task in conventional.tasks] == [task.exampleIndices for task in shuffled.tasks]


def test_build_is_deterministic() -> None:
    """Identical inputs give identical sequences."""

    service = ScenarioService()
    dataset = _dataset(12, 25)
    first = service.build(ScenarioKind.SHUFFLED, dataset, 0.2, 25, 3, None, seed=5)
    second = service.build(ScenarioKind.SHUFFLED, dataset, 0.2, 25, 3, None, seed=5)
    assert ScenarioService.to_manifest(first) == ScenarioService.to_manifest(second)


def test_build_raises_when_a_class_is_too_small() -> None:
    """A profile larger than the available examples is an insufficient-samples error."""

    service = ScenarioService()
    dataset = _dataset(4, 10)
    with pytest.raises(InsufficientSamplesError):
        service.build_ordered(dataset, service.make_profile(4, 11, 0.5), 2, None, seed=0)


def test_manifest_lists_tasks_and_examples() -> None:
    """The manifest exposes task ids, class ids and example ids."""

    service = ScenarioService()
    dataset = _dataset(4, 10)
    sequence = service.build(ScenarioKind.ORDERED, dataset, 0.5, 10, 2, None, seed=0)
    manifest = ScenarioService.to_manifest(sequence)
    assert manifest["scenario_kind"] == "ordered"
    assert [task["task_id"] for task in manifest["tasks"]] == [1, 2]
    assert sum(len(task["example_indices"]) for task in manifest["tasks"]) == sum(sequence.classCounts.values())
