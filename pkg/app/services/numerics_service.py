"""Dense numeric kernel: matrix helpers, a small ReLU MLP with analytic gradients,
momentum SGD and a finite-difference gradient checker.

Every matrix is a float64 ``numpy.ndarray``. Operations never reorder reductions,
so identical inputs produce bit-identical outputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np


logger = logging.getLogger(__name__)

Matrix = np.ndarray


class NumericsServiceError(RuntimeError):
    """Raised when a numeric operation receives invalid input."""


class DimensionError(NumericsServiceError):
    """Raised when operand shapes are incompatible."""


class ContractError(NumericsServiceError):
    """Raised when a caller breaks a usage contract (stale cache, unknown parameter)."""


class ParamSet:
    """Named parameter matrices with parallel gradients, momentum buffers and trainable flags."""

    def __init__(self) -> None:
        """Start with an empty collection."""

        self._values: Dict[str, Matrix] = {}
        self._grads: Dict[str, Matrix] = {}
        self._velocity: Dict[str, Matrix] = {}
        self._trainable: Dict[str, bool] = {}
        self.version = 0

    def add(self, name: str, value: Matrix, trainable: bool = True) -> None:
        """Register a new parameter; the value is copied to float64."""

        if name in self._values:
            raise ContractError(f"El parámetro '{name}' ya existe.")
        array = np.array(value, dtype=np.float64)
        self._values[name] = array
        self._grads[name] = np.zeros_like(array)
        self._velocity[name] = np.zeros_like(array)
        self._trainable[name] = bool(trainable)
        self.version += 1

    def remove(self, name: str) -> None:
        """Drop a parameter together with its gradient and momentum state."""

        self._require(name)
        for store in (self._values, self._grads, self._velocity, self._trainable):
            del store[name]
        self.version += 1

    def _require(self, name: str) -> None:
        if name not in self._values:
            raise ContractError(f"Parámetro desconocido: '{name}'.")

    def __contains__(self, name: object) -> bool:
        return name in self._values

    def __iter__(self) -> Iterator[str]:
        return iter(list(self._values))

    def __len__(self) -> int:
        return len(self._values)

    def names(self) -> List[str]:
        """Return parameter names in registration order."""

        return list(self._values)

    def value(self, name: str) -> Matrix:
        """Return the live parameter array (mutating it bumps nothing; use ``set_value``)."""

        self._require(name)
        return self._values[name]

    def set_value(self, name: str, value: Matrix) -> None:
        """Overwrite a parameter keeping its shape."""

        self._require(name)
        array = np.array(value, dtype=np.float64)
        if array.shape != self._values[name].shape:
            raise DimensionError(
                f"Forma {array.shape} incompatible con el parámetro '{name}' {self._values[name].shape}."
            )
        self._values[name] = array
        self.version += 1

    def grad(self, name: str) -> Matrix:
        """Return the accumulated gradient of a parameter."""

        self._require(name)
        return self._grads[name]

    def accumulate(self, name: str, gradient: Matrix) -> None:
        """Add ``gradient`` into the parameter's gradient buffer."""

        self._require(name)
        if gradient.shape != self._grads[name].shape:
            raise DimensionError(
                f"Gradiente {gradient.shape} incompatible con el parámetro '{name}' {self._grads[name].shape}."
            )
        self._grads[name] += gradient

    def is_trainable(self, name: str) -> bool:
        self._require(name)
        return self._trainable[name]

    def set_trainable(self, name: str, trainable: bool) -> None:
        self._require(name)
        self._trainable[name] = bool(trainable)

    def trainable_names(self) -> List[str]:
        return [name for name, flag in self._trainable.items() if flag]

    def zero_grad(self) -> None:
        for gradient in self._grads.values():
            gradient.fill(0.0)

    def reset_velocity(self) -> None:
        """Clear momentum buffers (done at every stage start)."""

        for buffer in self._velocity.values():
            buffer.fill(0.0)

    def velocity(self, name: str) -> Matrix:
        self._require(name)
        return self._velocity[name]

    def copy(self) -> "ParamSet":
        """Return a deep copy including flags; gradients and momentum start at zero."""

        clone = ParamSet()
        for name, value in self._values.items():
            clone.add(name, value, self._trainable[name])
        return clone


@dataclass
class MLPCache:
    """Intermediates recorded by ``mlp_forward`` for the matching backward call."""

    architecture: Tuple[int, ...]
    prefix: str
    version: int
    inputs: List[Matrix] = field(default_factory=list)
    preActivations: List[Matrix] = field(default_factory=list)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Return the matrix product ``a @ b`` after validating shapes."""

    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"No es posible multiplicar {a.shape} por {b.shape}.")
    return np.matmul(a.astype(np.float64, copy=False), b.astype(np.float64, copy=False))


def softmax_rows(z: Matrix) -> Matrix:
    """Row-wise softmax with per-row max subtraction."""

    shifted = z - z.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def log_softmax_rows(z: Matrix) -> Matrix:
    """Row-wise log-softmax evaluated with the log-sum-exp shift."""

    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> Matrix:
    """Uniform initialization in ``[-sqrt(6/(fan_in+fan_out)), +sqrt(...)]``."""

    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_mlp(
    params: ParamSet,
    architecture: Sequence[int],
    rng: np.random.Generator,
    prefix: str = "extractor",
) -> None:
    """Register one ``W``/``b`` pair per hidden layer of ``architecture``."""

    for layer, (fan_in, fan_out) in enumerate(zip(architecture[:-1], architecture[1:])):
        params.add(f"{prefix}.W{layer}", glorot_uniform(fan_in, fan_out, rng))
        params.add(f"{prefix}.b{layer}", np.zeros(fan_out))


def mlp_parameter_names(architecture: Sequence[int], prefix: str = "extractor") -> List[str]:
    names: List[str] = []
    for layer in range(len(architecture) - 1):
        names.extend([f"{prefix}.W{layer}", f"{prefix}.b{layer}"])
    return names


def mlp_forward(
    x: Matrix,
    params: ParamSet,
    architecture: Sequence[int],
    prefix: str = "extractor",
) -> Tuple[Matrix, MLPCache]:
    """Apply affine + ReLU per hidden layer and return the last activations as features.

    An architecture with a single entry has no hidden layers and returns ``x`` itself.
    """

    if x.ndim != 2 or x.shape[1] != architecture[0]:
        raise DimensionError(
            f"La entrada {x.shape} no coincide con la dimensión {architecture[0]} de la red."
        )
    cache = MLPCache(architecture=tuple(architecture), prefix=prefix, version=params.version)
    activation = x
    for layer in range(len(architecture) - 1):
        weight = params.value(f"{prefix}.W{layer}")
        bias = params.value(f"{prefix}.b{layer}")
        cache.inputs.append(activation)
        pre = matmul(activation, weight) + bias
        cache.preActivations.append(pre)
        activation = np.maximum(pre, 0.0)
    return activation, cache


def mlp_backward(grad_features: Matrix, cache: MLPCache, params: ParamSet) -> Matrix:
    """Accumulate parameter gradients for a cached forward pass and return dLoss/dx.

    The ReLU derivative at exactly zero is taken as zero.
    """

    if cache.version != params.version:
        raise ContractError("La caché del paso hacia adelante está desactualizada.")
    layers = len(cache.architecture) - 1
    if layers == 0:
        return grad_features
    if grad_features.shape != cache.preActivations[-1].shape:
        raise ContractError(
            f"Gradiente {grad_features.shape} no coincide con la salida cacheada {cache.preActivations[-1].shape}."
        )
    upstream = grad_features
    for layer in reversed(range(layers)):
        pre = cache.preActivations[layer]
        local = upstream * (pre > 0.0)
        weight_name = f"{cache.prefix}.W{layer}"
        params.accumulate(weight_name, matmul(cache.inputs[layer].T, local))
        params.accumulate(f"{cache.prefix}.b{layer}", local.sum(axis=0))
        upstream = matmul(local, params.value(weight_name).T)
    return upstream


def sgd_step(params: ParamSet, lr: float, momentum: float, weight_decay: float = 0.0) -> None:
    """Momentum SGD over trainable parameters, then zero every gradient.

    ``velocity <- momentum * velocity + grad``; ``param <- param - lr * velocity``.
    Non-trainable parameters are left untouched.
    """

    for name in params.trainable_names():
        gradient = params.grad(name)
        if weight_decay:
            gradient = gradient + weight_decay * params.value(name)
        velocity = params.velocity(name)
        velocity *= momentum
        velocity += gradient
        params.set_value(name, params.value(name) - lr * velocity)
    params.zero_grad()


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    """Relative discrepancy with a magnitude floor so near-zero gradients compare absolutely."""

    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_diff_check(
    loss_fn: Callable[[ParamSet], float],
    params: ParamSet,
    epsilon: float = 1e-5,
    kink_tolerance: float = 1e-7,
    names: Optional[Sequence[str]] = None,
) -> float:
    """Compare analytic gradients with central differences and return the worst relative error.

    ``loss_fn`` must return the loss and accumulate its analytic gradient into ``params``.
    Only trainable parameters are checked. Coordinates whose second difference exceeds
    ``kink_tolerance`` straddle a ReLU kink and are skipped; callers should move the check
    point off activation boundaries first (see ``move_off_relu_kinks``).
    """

    params.zero_grad()
    loss_fn(params)
    analytic = {name: params.grad(name).copy() for name in params.trainable_names()}
    params.zero_grad()

    worst = 0.0
    skipped = 0
    for name in names or list(analytic):
        base = params.value(name).copy()
        for position in np.ndindex(base.shape):
            shifted = base.copy()
            shifted[position] = base[position] + epsilon
            params.set_value(name, shifted)
            loss_plus = loss_fn(params)
            shifted[position] = base[position] - epsilon
            params.set_value(name, shifted)
            loss_minus = loss_fn(params)
            params.set_value(name, base)
            loss_center = loss_fn(params)
            params.zero_grad()
            if abs(loss_plus - 2.0 * loss_center + loss_minus) > kink_tolerance:
                skipped += 1
                continue
            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            worst = max(worst, relative_error(float(analytic[name][position]), numeric))
    if skipped:
        logger.debug("Se omitieron %s coordenadas sobre un quiebre de ReLU", skipped)
    return worst


def move_off_relu_kinks(
    x: Matrix,
    params: ParamSet,
    architecture: Sequence[int],
    prefix: str = "extractor",
    margin: float = 1e-3,
    max_rounds: int = 10,
) -> None:
    """Shift hidden biases until no pre-activation of ``x`` lies within ``margin`` of zero."""

    for _ in range(max_rounds):
        _features, cache = mlp_forward(x, params, architecture, prefix)
        adjusted = False
        for layer, pre in enumerate(cache.preActivations):
            close = np.abs(pre) < margin
            if not close.any():
                continue
            bias_name = f"{prefix}.b{layer}"
            shift = np.where(close.any(axis=0), 3.0 * margin, 0.0)
            params.set_value(bias_name, params.value(bias_name) + shift)
            adjusted = True
            break
        if not adjusted:
            return


NORM_EPSILON = 1e-12


def unit_rows(matrix: Matrix, epsilon: float = NORM_EPSILON) -> Tuple[Matrix, Matrix]:
    """Return ``(rows / max(||row||, epsilon), row norms)``."""

    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.maximum(norms, epsilon), norms


def unit_rows_backward(grad_unit: Matrix, unit: Matrix, norms: Matrix, epsilon: float = NORM_EPSILON) -> Matrix:
    """Gradient through ``unit_rows``; rows below ``epsilon`` are treated as a plain division."""

    projected = grad_unit - unit * np.sum(unit * grad_unit, axis=1, keepdims=True)
    return np.where(norms >= epsilon, projected / np.maximum(norms, epsilon), grad_unit / epsilon)
