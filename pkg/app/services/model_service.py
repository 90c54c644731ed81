"""Business logic for the incremental classifier: head growth, stage-2 freezing,
scaled and plain logits, analytic backward pass and nearest-class-mean inference.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.dtos.dataset_dto import Dataset
from app.dtos.model_dto import COSINE_SCALE_PARAM, LWS_PARAM, HeadKind, IncrementalModel
from app.services.numerics_service import (
    DimensionError,
    Matrix,
    MLPCache,
    ParamSet,
    glorot_uniform,
    init_mlp,
    matmul,
    mlp_backward,
    mlp_forward,
    mlp_parameter_names,
    unit_rows,
    unit_rows_backward,
)


logger = logging.getLogger(__name__)

EXTRACTOR_PREFIX = "extractor"


class ModelServiceError(RuntimeError):
    """Raised when the model cannot perform an operation."""


class ModelStateError(ModelServiceError):
    """Raised when an operation is invalid for the model's current lifecycle state."""


@dataclass
class ModelCache:
    """Intermediates of ``forward_with_cache`` consumed by ``backward``."""

    mlp: MLPCache
    features: Matrix
    rawLogits: Matrix
    scaled: bool
    featureNorms: Optional[Matrix] = None
    unitFeatures: Optional[Matrix] = None
    weightNorms: List[Matrix] = field(default_factory=list)
    unitWeights: List[Matrix] = field(default_factory=list)
    cosines: Optional[Matrix] = None


def head_prefix(head: int) -> str:
    return f"head{head}"


def create_model(
    input_dim: int,
    hidden_layers: Sequence[int],
    seed: int,
    head_kind: HeadKind = HeadKind.LINEAR,
    cosine_scale: float = 10.0,
) -> IncrementalModel:
    """Build a model with an initialized extractor and no heads."""

    architecture = [int(input_dim)] + [int(width) for width in hidden_layers]
    params = ParamSet()
    init_mlp(params, architecture, np.random.default_rng([seed, 0]), EXTRACTOR_PREFIX)
    return IncrementalModel(
        params=params,
        architecture=architecture,
        headKind=head_kind,
        cosineScaleInit=cosine_scale,
    )


def copy_model(model: IncrementalModel) -> IncrementalModel:
    """Return an independent deep copy (parameters, flags, bookkeeping and class means)."""

    return IncrementalModel(
        params=model.params.copy(),
        architecture=list(model.architecture),
        headKind=model.headKind,
        headWidths=list(model.headWidths),
        classIds=list(model.classIds),
        classMeans={label: mean.copy() for label, mean in model.classMeans.items()},
        cosineScaleInit=model.cosineScaleInit,
    )


def extractor_parameter_names(model: IncrementalModel) -> List[str]:
    return mlp_parameter_names(model.architecture, EXTRACTOR_PREFIX)


def head_parameter_names(model: IncrementalModel, head: int) -> List[str]:
    prefix = head_prefix(head)
    return [name for name in model.params.names() if name.startswith(f"{prefix}.")]


def add_task_head(
    model: IncrementalModel,
    num_new_classes: int,
    seed: int,
    class_ids: Optional[Sequence[int]] = None,
) -> None:
    """Append a fresh head, discard the scaling vector and make everything trainable."""

    if num_new_classes < 1:
        raise ModelServiceError("Una tarea nueva debe aportar al menos una clase.")
    if class_ids is None:
        start = max(model.classIds, default=-1) + 1
        class_ids = list(range(start, start + num_new_classes))
    if len(class_ids) != num_new_classes:
        raise ModelServiceError("class_ids debe tener num_new_classes elementos.")
    duplicated = set(class_ids) & set(model.classIds)
    if duplicated:
        raise ModelStateError(f"Las clases {sorted(duplicated)} ya tienen cabeza asignada.")

    head = model.numHeads
    prefix = head_prefix(head)
    rng = np.random.default_rng([seed, head + 1])
    model.params.add(f"{prefix}.W", glorot_uniform(model.featureDim, num_new_classes, rng))
    if model.headKind is HeadKind.LINEAR:
        model.params.add(f"{prefix}.b", np.zeros(num_new_classes))
    elif COSINE_SCALE_PARAM not in model.params:
        model.params.add(COSINE_SCALE_PARAM, np.array([model.cosineScaleInit]))

    if model.hasLws:
        model.params.remove(LWS_PARAM)
    for name in model.params.names():
        model.params.set_trainable(name, True)
    model.headWidths.append(num_new_classes)
    model.classIds.extend(int(class_id) for class_id in class_ids)
    logger.debug("Cabeza %s añadida con %s clases", head, num_new_classes)


def freeze_for_stage2(model: IncrementalModel, freeze_old_heads: bool = True, use_lws: bool = True) -> None:
    """Freeze the extractor (and the previous heads) and attach an all-ones scaling vector."""

    if model.numHeads < 1:
        raise ModelStateError("No es posible congelar un modelo sin cabezas.")
    current = f"{head_prefix(model.numHeads - 1)}."
    for name in model.params.names():
        trainable = name.startswith(current) or (not freeze_old_heads and name.startswith("head"))
        model.params.set_trainable(name, trainable)
    if model.hasLws:
        model.params.remove(LWS_PARAM)
    if use_lws:
        model.params.add(LWS_PARAM, np.ones(model.numClasses), trainable=True)


def extract_features(model: IncrementalModel, x: Matrix) -> Matrix:
    features, _cache = mlp_forward(x, model.params, model.architecture, EXTRACTOR_PREFIX)
    return features


def forward_with_cache(model: IncrementalModel, x: Matrix, scaled: bool = False) -> Tuple[Matrix, ModelCache]:
    """Compute logits (optionally scaled by the LWS vector) and keep intermediates for backward."""

    if model.numHeads == 0:
        raise ModelStateError("El modelo aún no tiene cabezas de clasificación.")
    if scaled and not model.hasLws:
        raise ModelStateError("La capa de escalado no existe fuera de la segunda etapa.")
    features, mlp_cache = mlp_forward(x, model.params, model.architecture, EXTRACTOR_PREFIX)
    cache = ModelCache(mlp=mlp_cache, features=features, rawLogits=features, scaled=scaled)

    if model.headKind is HeadKind.LINEAR:
        blocks = [
            matmul(features, model.params.value(f"{head_prefix(head)}.W"))
            + model.params.value(f"{head_prefix(head)}.b")
            for head in range(model.numHeads)
        ]
        raw = np.concatenate(blocks, axis=1)
    else:
        cache.unitFeatures, cache.featureNorms = unit_rows(features)
        cosine_blocks = []
        for head in range(model.numHeads):
            unit_columns, column_norms = unit_rows(model.params.value(f"{head_prefix(head)}.W").T)
            cache.unitWeights.append(unit_columns.T)
            cache.weightNorms.append(column_norms.T)
            cosine_blocks.append(matmul(cache.unitFeatures, unit_columns.T))
        cache.cosines = np.concatenate(cosine_blocks, axis=1)
        raw = float(model.params.value(COSINE_SCALE_PARAM)[0]) * cache.cosines

    cache.rawLogits = raw
    if scaled:
        return raw * model.params.value(LWS_PARAM), cache
    return raw, cache


def forward_logits(model: IncrementalModel, x: Matrix) -> Matrix:
    """Concatenated head outputs, columns ordered by task then class."""

    logits, _cache = forward_with_cache(model, x, scaled=False)
    return logits


def forward_scaled(model: IncrementalModel, x: Matrix) -> Matrix:
    """Logits multiplied column-wise by the LWS vector."""

    logits, _cache = forward_with_cache(model, x, scaled=True)
    return logits


def backward(
    model: IncrementalModel,
    grad_logits: Matrix,
    cache: ModelCache,
    grad_features: Optional[Matrix] = None,
) -> None:
    """Accumulate gradients of every parameter reached by ``grad_logits``.

    ``grad_features`` is an extra gradient on the extractor output (feature distillation).
    The extractor backward pass is skipped while none of its parameters is trainable.
    """

    if grad_logits.shape != cache.rawLogits.shape:
        raise DimensionError(
            f"Gradiente {grad_logits.shape} incompatible con los logits {cache.rawLogits.shape}."
        )
    params = model.params
    upstream = grad_logits
    if cache.scaled:
        params.accumulate(LWS_PARAM, np.sum(grad_logits * cache.rawLogits, axis=0))
        upstream = grad_logits * params.value(LWS_PARAM)

    feature_grad = np.zeros_like(cache.features) if grad_features is None else grad_features.copy()
    if model.headKind is HeadKind.LINEAR:
        for head in range(model.numHeads):
            prefix = head_prefix(head)
            block = upstream[:, model.head_slice(head)]
            params.accumulate(f"{prefix}.W", matmul(cache.features.T, block))
            params.accumulate(f"{prefix}.b", block.sum(axis=0))
            feature_grad += matmul(block, params.value(f"{prefix}.W").T)
    else:
        eta = float(params.value(COSINE_SCALE_PARAM)[0])
        params.accumulate(COSINE_SCALE_PARAM, np.array([np.sum(upstream * cache.cosines)]))
        grad_cosines = eta * upstream
        grad_unit_features = np.zeros_like(cache.unitFeatures)
        for head in range(model.numHeads):
            block = grad_cosines[:, model.head_slice(head)]
            unit_weights = cache.unitWeights[head]
            grad_unit_weights = matmul(cache.unitFeatures.T, block)
            grad_weights = unit_rows_backward(grad_unit_weights.T, unit_weights.T, cache.weightNorms[head].T).T
            params.accumulate(f"{head_prefix(head)}.W", grad_weights)
            grad_unit_features += matmul(block, unit_weights.T)
        feature_grad += unit_rows_backward(grad_unit_features, cache.unitFeatures, cache.featureNorms)

    if any(params.is_trainable(name) for name in extractor_parameter_names(model)):
        mlp_backward(feature_grad, cache.mlp, params)


def compute_class_means(model: IncrementalModel, dataset: Dataset, ids_by_class: Dict[int, Iterable[int]]) -> None:
    """Store the normalized mean of normalized features for every class with at least one id.

    Classes without ids keep whatever mean they had.
    """

    for class_id in sorted(ids_by_class):
        ids = list(ids_by_class[class_id])
        if not ids:
            continue
        unit, _norms = unit_rows(extract_features(model, dataset.features_for(ids)))
        mean = unit.mean(axis=0)
        model.classMeans[class_id] = unit_rows(mean[None, :])[0][0]


def ncm_predict(model: IncrementalModel, x: Matrix) -> np.ndarray:
    """Assign each row the class whose normalized mean is nearest to its normalized feature.

    Equidistant means resolve to the lower class id. The scaling vector is not used.
    """

    class_ids = sorted(model.classIds)
    missing = [class_id for class_id in class_ids if class_id not in model.classMeans]
    if missing:
        raise ModelStateError(f"Falta la media de la clase {missing[0]} para la predicción NCM.")
    means = np.stack([model.classMeans[class_id] for class_id in class_ids])
    unit, _norms = unit_rows(extract_features(model, x))
    distances = np.linalg.norm(unit[:, None, :] - means[None, :, :], axis=2)
    return np.array(class_ids, dtype=np.int64)[np.argmin(distances, axis=1)]


def predict_classes(model: IncrementalModel, x: Matrix, predictor: str) -> np.ndarray:
    """Predict class ids with ``scaled`` (LWS when present), ``plain`` logits or ``ncm``."""

    if predictor == "ncm":
        return ncm_predict(model, x)
    if predictor == "scaled" and model.hasLws:
        logits = forward_scaled(model, x)
    else:
        logits = forward_logits(model, x)
    return np.array(model.classIds, dtype=np.int64)[np.argmax(logits, axis=1)]
