"""Evaluation metrics: per-class and average accuracy, average incremental accuracy,
head/tail breakdowns and forgetting.

Every metric is a pure function of labels and predictions.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from app.dtos.dataset_dto import Dataset
from app.dtos.metrics_dto import HeadTailBreakdown, TaskEval
from app.dtos.model_dto import IncrementalModel
from app.dtos.scenario_dto import ImbalanceProfile
from app.services.model_service import predict_classes


logger = logging.getLogger(__name__)


class MetricsServiceError(RuntimeError):
    """Raised when a metric cannot be computed."""


class MetricsParameterError(MetricsServiceError):
    """Raised for empty or inconsistent metric inputs."""


class EvaluationError(MetricsServiceError):
    """Raised when the test data cannot support an evaluation."""


def evaluate_predictions(
    task_id: int,
    seen_classes: Iterable[int],
    labels: Sequence[int],
    predictions: Sequence[int],
    example_indices: Optional[Sequence[int]] = None,
) -> TaskEval:
    """Tally per-class accuracy over ``seen_classes`` and average it unweighted."""

    seen = sorted(int(class_id) for class_id in seen_classes)
    label_array = np.asarray(labels, dtype=np.int64)
    prediction_array = np.asarray(predictions, dtype=np.int64)
    if label_array.shape != prediction_array.shape:
        raise MetricsParameterError("Etiquetas y predicciones deben tener la misma longitud.")
    if not seen:
        raise MetricsParameterError("No hay clases vistas que evaluar.")

    per_class: Dict[int, float] = {}
    for class_id in seen:
        mask = label_array == class_id
        total = int(mask.sum())
        if total == 0:
            raise EvaluationError(f"La clase {class_id} no tiene ejemplos de prueba.")
        per_class[class_id] = int(np.sum(prediction_array[mask] == class_id)) / total

    indices = list(range(len(label_array))) if example_indices is None else [int(i) for i in example_indices]
    return TaskEval(
        taskId=task_id,
        perClassAccuracy=per_class,
        averageAccuracy=float(np.mean([per_class[class_id] for class_id in seen])),
        numSeenClasses=len(seen),
        exampleIndices=indices,
        labels=[int(label) for label in label_array],
        predictions=[int(prediction) for prediction in prediction_array],
    )


def evaluate_task(
    model: IncrementalModel,
    test: Dataset,
    seen_classes: Iterable[int],
    predictor: str,
    task_id: int = 0,
) -> TaskEval:
    """Predict every test example of a seen class and tally per-class accuracy."""

    seen = sorted(int(class_id) for class_id in seen_classes)
    for class_id in seen:
        if class_id >= test.numClasses or not test.perClassIndex.get(class_id):
            raise EvaluationError(f"La clase vista {class_id} no aparece en el conjunto de prueba.")
    ids = sorted(index for class_id in seen for index in test.perClassIndex[class_id])
    predictions = predict_classes(model, test.features_for(ids), predictor)
    return evaluate_predictions(task_id, seen, test.labels_for(ids), predictions, ids)


def average_incremental(evals: Sequence[TaskEval]) -> float:
    """Arithmetic mean of the per-task average accuracies."""

    if not evals:
        raise MetricsParameterError("Se requiere al menos una evaluación.")
    return float(np.mean([task_eval.averageAccuracy for task_eval in evals]))


def head_tail_breakdown(
    task_eval: TaskEval,
    profile: ImbalanceProfile,
    rank_order: Sequence[int],
) -> HeadTailBreakdown:
    """Split seen classes at the median training count and average each half.

    ``rank_order[r]`` is the class that received ``profile.counts[r]``. Classes are sorted
    by count descending, then id ascending; the first ``n // 2`` form the head and the rest
    the tail. A single seen class forms both halves.
    """

    counts = {int(class_id): profile.counts[rank] for rank, class_id in enumerate(rank_order)}
    seen = list(task_eval.perClassAccuracy)
    missing = [class_id for class_id in seen if class_id not in counts]
    if missing:
        raise MetricsParameterError(f"El perfil no cubre la clase {missing[0]}.")
    ordered = sorted(seen, key=lambda class_id: (-counts[class_id], class_id))
    if len(ordered) == 1:
        value = task_eval.perClassAccuracy[ordered[0]]
        return HeadTailBreakdown(headMean=value, tailMean=value)
    cut = len(ordered) // 2
    head = [task_eval.perClassAccuracy[class_id] for class_id in ordered[:cut]]
    tail = [task_eval.perClassAccuracy[class_id] for class_id in ordered[cut:]]
    return HeadTailBreakdown(headMean=float(np.mean(head)), tailMean=float(np.mean(tail)))


def forgetting(evals: Sequence[TaskEval]) -> float:
    """Mean over classes seen before the last task of (best earlier accuracy - final accuracy)."""

    if not evals:
        raise MetricsParameterError("Se requiere al menos una evaluación.")
    final = evals[-1].perClassAccuracy
    drops: List[float] = []
    for class_id, final_accuracy in sorted(final.items()):
        earlier = [task_eval.perClassAccuracy[class_id] for task_eval in evals[:-1] if class_id in task_eval.perClassAccuracy]
        if earlier:
            drops.append(max(earlier) - final_accuracy)
    return float(np.mean(drops)) if drops else 0.0


def recompute_from_predictions(rows: Iterable[Dict[str, int]]) -> List[TaskEval]:
    """Rebuild every ``TaskEval`` from ``task_id/example_index/label/prediction`` records.

    The seen classes of a task are the labels present in its records.
    """

    grouped: Dict[int, List[Dict[str, int]]] = {}
    for row in rows:
        grouped.setdefault(int(row["task_id"]), []).append(row)
    evals = []
    for task_id in sorted(grouped):
        records = grouped[task_id]
        labels = [int(record["label"]) for record in records]
        evals.append(
            evaluate_predictions(
                task_id,
                set(labels),
                labels,
                [int(record["prediction"]) for record in records],
                [int(record["example_index"]) for record in records],
            )
        )
    return evals
