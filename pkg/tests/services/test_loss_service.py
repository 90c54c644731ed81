"""Tests for the loss functions and the full stage-1 gradient."""

from pathlib import Path
import math
import sys

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[2]))

from app.dtos.model_dto import HeadKind
from app.services.loss_service import (
    LossContractError,
    cross_entropy,
    distill_weight,
    feature_distill,
    logit_distill,
)
from app.services.model_service import (
    add_task_head,
    backward,
    copy_model,
    create_model,
    extract_features,
    forward_logits,
    forward_with_cache,
)
from app.services.numerics_service import ParamSet, finite_diff_check, move_off_relu_kinks


def _numeric_gradient(loss, matrix: np.ndarray, epsilon: float = 1e-6) -> np.ndarray:
    gradient = np.zeros_like(matrix)
    for position in np.ndindex(matrix.shape):
        plus = matrix.copy()
        minus = matrix.copy()
        plus[position] += epsilon
        minus[position] -= epsilon
        gradient[position] = (loss(plus) - loss(minus)) / (2 * epsilon)
    return gradient


def test_cross_entropy_uniform_logits_equal_log_k() -> None:
    """Uniform logits over K classes cost ln K."""

    loss, _grad = cross_entropy(np.zeros((4, 5)), [0, 1, 2, 3])
    assert loss == pytest.approx(math.log(5), abs=1e-12)


def test_cross_entropy_large_margin_tends_to_zero() -> None:
    """A huge margin on the true class drives the loss to zero."""

    logits = np.array([[500.0, 0.0, 0.0]])
    loss, _grad = cross_entropy(logits, [0])
    assert loss < 1e-12


def test_cross_entropy_matches_log_sum_exp_and_gradient() -> None:
    """Compare with a separately coded log-sum-exp evaluation and numeric gradient."""

    rng = np.random.default_rng(2)
    logits = rng.standard_normal((6, 4))
    labels = [0, 3, 1, 1, 2, 0]
    loss, grad = cross_entropy(logits, labels)
    expected = np.mean([np.log(np.sum(np.exp(row))) - row[label] for row, label in zip(logits, labels)])
    assert loss == pytest.approx(expected, abs=1e-12)
    numeric = _numeric_gradient(lambda z: cross_entropy(z, labels)[0], logits)
    assert np.allclose(grad, numeric, atol=1e-8)


def test_cross_entropy_rejects_out_of_range_label() -> None:
    """Labels must index an existing column."""

    with pytest.raises(LossContractError):
        cross_entropy(np.zeros((2, 3)), [0, 3])


def test_logit_distill_matched_distributions_reach_minimum() -> None:
    """With new = old the loss equals T² times the soft-target entropy and the gradient vanishes."""

    rng = np.random.default_rng(4)
    old = rng.standard_normal((5, 3))
    temperature = 2.0
    loss, grad = logit_distill(old.copy(), old, temperature)
    soft = np.exp(old / temperature) / np.exp(old / temperature).sum(axis=1, keepdims=True)
    entropy = -np.sum(soft * np.log(soft), axis=1).mean()
    assert loss == pytest.approx(temperature ** 2 * entropy, abs=1e-12)
    assert np.allclose(grad, 0.0, atol=1e-15)


def test_logit_distill_temperature_one_is_soft_cross_entropy() -> None:
    """T = 1 reduces to the plain soft-target cross-entropy."""

    rng = np.random.default_rng(6)
    new = rng.standard_normal((3, 4))
    old = rng.standard_normal((3, 4))
    loss, _grad = logit_distill(new, old, 1.0)
    targets = np.exp(old) / np.exp(old).sum(axis=1, keepdims=True)
    log_probs = new - np.log(np.exp(new).sum(axis=1, keepdims=True))
    assert loss == pytest.approx(float(-np.sum(targets * log_probs, axis=1).mean()), abs=1e-12)


def test_logit_distill_gradient_matches_finite_differences() -> None:
    """The analytic gradient agrees with central differences."""

    rng = np.random.default_rng(8)
    new = rng.standard_normal((4, 3))
    old = rng.standard_normal((4, 3))
    _loss, grad = logit_distill(new, old, 2.0)
    numeric = _numeric_gradient(lambda z: logit_distill(z, old, 2.0)[0], new)
    assert np.allclose(grad, numeric, atol=1e-8)


def test_logit_distill_without_old_columns_is_zero() -> None:
    """The first task has no old classes and contributes nothing."""

    loss, grad = logit_distill(np.zeros((3, 0)), np.zeros((3, 0)), 2.0)
    assert loss == 0.0
    assert grad.shape == (3, 0)


def test_feature_distill_identical_and_orthogonal_features() -> None:
    """Identical rows cost 0; orthogonal rows cost lambda each."""

    features = np.array([[1.0, 0.0], [0.0, 2.0]])
    loss, _grad = feature_distill(features, features.copy(), 5.0, 4, 4)
    assert loss == pytest.approx(0.0, abs=1e-12)
    orthogonal = np.array([[0.0, 3.0], [1.0, 0.0]])
    loss, _grad = feature_distill(features, orthogonal, 5.0, 4, 4)
    assert loss == pytest.approx(5.0, abs=1e-12)


def test_feature_distill_weight_scales_with_class_ratio() -> None:
    """Doubling c_new with c_old fixed divides lambda by sqrt(2)."""

    assert distill_weight(5.0, 10, 4) / distill_weight(5.0, 10, 8) == pytest.approx(math.sqrt(2.0))
    assert distill_weight(5.0, 10, 10) == pytest.approx(5.0)


def test_feature_distill_gradient_matches_finite_differences() -> None:
    """The gradient through row normalization agrees with central differences."""

    rng = np.random.default_rng(10)
    new = rng.standard_normal((4, 3))
    old = rng.standard_normal((4, 3))
    _loss, grad = feature_distill(new, old, 2.0, 6, 3)
    numeric = _numeric_gradient(lambda z: feature_distill(z, old, 2.0, 6, 3)[0], new)
    assert np.allclose(grad, numeric, atol=1e-8)


def test_feature_distill_first_task_and_zero_rows() -> None:
    """No old classes gives 0; an all-zero row is guarded instead of dividing by zero."""

    loss, _grad = feature_distill(np.ones((2, 2)), np.ones((2, 2)), 5.0, 0, 2)
    assert loss == 0.0
    loss, grad = feature_distill(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([[1.0, 0.0], [1.0, 0.0]]), 1.0, 2, 2)
    assert np.isfinite(loss)
    assert np.all(np.isfinite(grad))


def _two_task_model(seed: int, head_kind: HeadKind):
    model = create_model(4, [8], seed, head_kind)
    add_task_head(model, 3, seed)
    old_model = copy_model(model)
    add_task_head(model, 2, seed)
    return model, old_model


@pytest.mark.parametrize("seed", list(range(10)))
@pytest.mark.parametrize(
    "aux, head_kind",
    [("none", HeadKind.LINEAR), ("logit", HeadKind.LINEAR), ("feature", HeadKind.COSINE)],
)
def test_stage1_loss_passes_gradient_check(seed: int, aux: str, head_kind: HeadKind) -> None:
    """CE plus each auxiliary loss matches central differences over every trainable parameter."""

    rng = np.random.default_rng(100 + seed)
    model, old_model = _two_task_model(seed, head_kind)
    x = rng.standard_normal((6, 4))
    labels = rng.integers(0, model.numClasses, size=6)
    move_off_relu_kinks(x, model.params, model.architecture)
    old_logits = forward_logits(old_model, x)
    old_features = extract_features(old_model, x)
    c_old = old_model.numClasses

    def loss_fn(_params: ParamSet) -> float:
        logits, cache = forward_with_cache(model, x)
        value, grad_logits = cross_entropy(logits, labels)
        grad_features = None
        if aux == "logit":
            extra, grad_old = logit_distill(logits[:, :c_old], old_logits, 2.0)
            grad_logits[:, :c_old] += grad_old
            value += extra
        elif aux == "feature":
            extra, grad_features = feature_distill(cache.features, old_features, 5.0, c_old, 2)
            value += extra
        backward(model, grad_logits, cache, grad_features)
        return value

    assert finite_diff_check(loss_fn, model.params) < 1e-4
