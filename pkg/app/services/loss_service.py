"""Loss functions returning ``(value, gradient)`` pairs for the training loop."""

from __future__ import annotations

import logging
import math
from typing import Sequence, Tuple

import numpy as np

from app.services.numerics_service import (
    NORM_EPSILON,
    Matrix,
    log_softmax_rows,
    softmax_rows,
    unit_rows,
    unit_rows_backward,
)


logger = logging.getLogger(__name__)


class LossServiceError(RuntimeError):
    """Raised when a loss cannot be evaluated."""


class LossContractError(LossServiceError):
    """Raised when inputs break a loss contract (label range, shapes, temperature)."""


def cross_entropy(logits: Matrix, labels: Sequence[int]) -> Tuple[float, Matrix]:
    """Mean ``-log softmax(logits)[label]`` over the batch and its gradient ``(softmax - onehot) / n``.

    ``labels`` are logit column indices.
    """

    targets = np.asarray(labels, dtype=np.int64)
    batch, width = logits.shape
    if targets.shape != (batch,):
        raise LossContractError(f"Se esperaban {batch} etiquetas y se recibieron {targets.shape}.")
    if batch == 0:
        raise LossContractError("El lote está vacío.")
    if targets.min() < 0 or targets.max() >= width:
        raise LossContractError(f"Etiqueta fuera del rango [0, {width}).")

    log_probs = log_softmax_rows(logits)
    rows = np.arange(batch)
    loss = float(-log_probs[rows, targets].mean())
    gradient = np.exp(log_probs)
    gradient[rows, targets] -= 1.0
    return loss, gradient / batch


def logit_distill(new_logits_old_cols: Matrix, old_logits: Matrix, temperature: float) -> Tuple[float, Matrix]:
    """Soft-target cross-entropy at ``temperature`` scaled by ``temperature ** 2``.

    The old distribution is a constant target. With no old columns the loss is 0.
    """

    if temperature <= 0:
        raise LossContractError("La temperatura debe ser positiva.")
    if new_logits_old_cols.shape != old_logits.shape:
        raise LossContractError(
            f"Formas distintas para la destilación: {new_logits_old_cols.shape} vs {old_logits.shape}."
        )
    batch, width = new_logits_old_cols.shape
    if width == 0 or batch == 0:
        return 0.0, np.zeros_like(new_logits_old_cols)

    targets = softmax_rows(old_logits / temperature)
    log_probs = log_softmax_rows(new_logits_old_cols / temperature)
    scale = temperature ** 2
    loss = float(scale * -np.sum(targets * log_probs, axis=1).mean())
    gradient = temperature * (np.exp(log_probs) - targets) / batch
    return loss, gradient


def distill_weight(lambda_base: float, c_old: int, c_new: int) -> float:
    """``lambda_base * sqrt(c_old / c_new)``."""

    if c_new < 1:
        raise LossContractError("c_new debe ser >= 1.")
    return lambda_base * math.sqrt(c_old / c_new)


def feature_distill(
    new_feat: Matrix,
    old_feat: Matrix,
    lambda_base: float,
    c_old: int,
    c_new: int,
) -> Tuple[float, Matrix]:
    """``lambda * mean(1 - cos(new, old))`` with ``lambda = lambda_base * sqrt(c_old / c_new)``.

    Returns 0 when there are no old classes.
    """

    if new_feat.shape != old_feat.shape:
        raise LossContractError(f"Formas distintas para la destilación: {new_feat.shape} vs {old_feat.shape}.")
    batch = new_feat.shape[0]
    if c_old == 0 or batch == 0:
        return 0.0, np.zeros_like(new_feat)

    weight = distill_weight(lambda_base, c_old, c_new)
    unit_new, new_norms = unit_rows(new_feat)
    unit_old, old_norms = unit_rows(old_feat)
    degenerate = int(np.sum(new_norms < NORM_EPSILON) + np.sum(old_norms < NORM_EPSILON))
    if degenerate:
        logger.warning("Destilación de características: %s filas con norma nula", degenerate)

    cosines = np.sum(unit_new * unit_old, axis=1)
    loss = float(weight * np.mean(1.0 - cosines))
    grad_unit = -weight * unit_old / batch
    return loss, unit_rows_backward(grad_unit, unit_new, new_norms)
