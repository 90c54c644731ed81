"""Parse, validate and serialize experiment configuration files.

Files are JSON (or YAML when the suffix is ``.yaml``/``.yml``) with snake_case keys that
map onto the camelCase fields of ``ExperimentConfig``. Missing keys take the dataclass
defaults:

- ``dataset``: kind=synthetic, num_classes=20, per_class=250, feature_dim=16,
  cluster_spread=0.35, radius=1.0, test_per_class=50, csv_path=null
- ``scenario``: kind=shuffled, rho=0.01, n_max=200, num_tasks=5, base_classes=ceil(C/2)
- ``memory``: mode=per_class, budget=10, selection=herding
- ``model``: hidden_layers=[64, 32], head_kind follows the strategy, cosine_scale=10.0
- ``train``: epochs_stage1=30, epochs_stage2=30, lr_stage1=0.1, milestones=[20, 25],
  lr_stage2=0.1, momentum=0.9, weight_decay=0.0, batch_size=32,
  aux={kind: none, temperature: 2.0, lambda_base: 5.0}, freeze_old_heads=true,
  use_lws=true, seed=0 (replaced per run by the derived sampler seed)
- ``strategy``=replay, ``two_stage``=true, ``predictor``=scaled, ``seeds``=[0],
  ``output_dir``="runs", ``save_checkpoints``=false

Unknown keys, type mismatches and constraint violations raise ``ConfigurationError``
carrying the dotted key path.

The default ``scenario.rho`` is long-tailed, so a conventional scenario must also set
``rho: 1`` (for example ``{"scenario": {"kind": "conventional", "rho": 1}}``).
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
import typing
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from app.dtos.experiment_dto import DatasetKind, ExperimentConfig, Strategy
from app.dtos.model_dto import HeadKind
from app.dtos.scenario_dto import ScenarioKind
from app.dtos.training_dto import AuxKind


logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")
ROOT_KEY_PATH = "<raíz>"
_CAMEL_BOUNDARY = re.compile(r"(?<!^)(?=[A-Z])")


class ConfigurationError(ValueError):
    """Raised when a configuration file is unreadable, malformed or violates a constraint."""

    def __init__(self, message: str, key_path: str = "") -> None:
        super().__init__(f"{key_path}: {message}" if key_path else message)
        self.keyPath = key_path


def snake_case(field_name: str) -> str:
    return _CAMEL_BOUNDARY.sub("_", field_name).lower()


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _convert(value: Any, hint: Any, path: str) -> Any:
    origin = typing.get_origin(hint)
    if origin is Union:
        if value is None:
            return None
        (inner,) = [arg for arg in typing.get_args(hint) if arg is not type(None)]
        return _convert(value, inner, path)
    if origin in (list, typing.List):
        if not isinstance(value, list):
            raise ConfigurationError("se esperaba una lista", path)
        (inner,) = typing.get_args(hint)
        return [_convert(item, inner, f"{path}[{position}]") for position, item in enumerate(value)]
    if dataclasses.is_dataclass(hint):
        return _build_dataclass(hint, value, path)
    if isinstance(hint, type) and issubclass(hint, Enum):
        allowed = [member.value for member in hint]
        if value not in allowed:
            raise ConfigurationError(f"valor '{value}' no permitido; opciones: {allowed}", path)
        return hint(value)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigurationError("se esperaba un booleano", path)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError("se esperaba un entero", path)
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError("se esperaba un número", path)
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigurationError("se esperaba una cadena", path)
        return value
    raise ConfigurationError(f"tipo no soportado {hint!r}", path)  # pragma: no cover - tipos internos


def _build_dataclass(cls: Any, payload: Any, path: str) -> Any:
    if not isinstance(payload, Mapping):
        raise ConfigurationError("se esperaba un objeto", path or ROOT_KEY_PATH)
    hints = typing.get_type_hints(cls)
    fields = {snake_case(item.name): item for item in dataclasses.fields(cls) if item.init}
    unknown = sorted(set(payload) - set(fields))
    if unknown:
        raise ConfigurationError("clave desconocida", _join(path, str(unknown[0])))
    kwargs = {
        fields[key].name: _convert(value, hints[fields[key].name], _join(path, key))
        for key, value in payload.items()
    }
    return cls(**kwargs)


def _to_plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            snake_case(item.name): _to_plain(getattr(value, item.name))
            for item in dataclasses.fields(value)
            if item.init
        }
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, list):
        return [_to_plain(item) for item in value]
    return value


def config_to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    """Serialize ``config`` with snake_case keys; ``parse_config_dict`` reverses it."""

    return _to_plain(config)


def _require(condition: bool, message: str, key_path: str) -> None:
    if not condition:
        raise ConfigurationError(message, key_path)


def resolve_strategy(config: ExperimentConfig) -> None:
    """Fill the auxiliary loss and head kind implied by ``strategy``.

    ``lwf`` uses logit distillation, ``lucir`` a cosine head with feature distillation and
    ``replay`` keeps whatever ``train.aux.kind`` says. Explicit values that contradict the
    strategy are rejected.
    """

    aux = config.train.aux
    if config.strategy is Strategy.LWF:
        _require(
            aux.kind in (AuxKind.NONE, AuxKind.LOGIT_DISTILL),
            "la estrategia lwf usa logit_distill",
            "train.aux.kind",
        )
        aux.kind = AuxKind.LOGIT_DISTILL
    elif config.strategy is Strategy.LUCIR:
        _require(
            aux.kind in (AuxKind.NONE, AuxKind.FEATURE_DISTILL),
            "la estrategia lucir usa feature_distill",
            "train.aux.kind",
        )
        _require(
            config.model.headKind in (None, HeadKind.COSINE),
            "la estrategia lucir usa una cabeza coseno",
            "model.head_kind",
        )
        aux.kind = AuxKind.FEATURE_DISTILL
        config.model.headKind = HeadKind.COSINE
    if config.model.headKind is None:
        config.model.headKind = HeadKind.LINEAR


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """Check every documented constraint and resolve the strategy in place."""

    dataset = config.dataset
    _require(dataset.numClasses >= 1, "debe ser >= 1", "dataset.num_classes")
    _require(dataset.perClass >= 1, "debe ser >= 1", "dataset.per_class")
    _require(dataset.featureDim >= 1, "debe ser >= 1", "dataset.feature_dim")
    _require(dataset.clusterSpread > 0, "debe ser positivo", "dataset.cluster_spread")
    _require(dataset.radius > 0, "debe ser positivo", "dataset.radius")
    _require(dataset.testPerClass >= 0, "no puede ser negativo", "dataset.test_per_class")
    if dataset.kind is DatasetKind.CSV:
        _require(bool(dataset.csvPath), "es obligatorio para datasets csv", "dataset.csv_path")

    scenario = config.scenario
    _require(0.0 < scenario.rho <= 1.0, "debe estar en (0, 1]", "scenario.rho")
    _require(scenario.nMax >= 1, "debe ser >= 1", "scenario.n_max")
    _require(scenario.numTasks >= 1, "debe ser >= 1", "scenario.num_tasks")
    if scenario.baseClasses is not None:
        _require(scenario.baseClasses >= 1, "debe ser >= 1", "scenario.base_classes")
    if scenario.kind is ScenarioKind.CONVENTIONAL:
        _require(scenario.rho == 1.0, "el escenario convencional requiere rho = 1", "scenario.rho")

    _require(config.memory.budget >= 0, "no puede ser negativo", "memory.budget")
    for position, width in enumerate(config.model.hiddenLayers):
        _require(width >= 1, "debe ser >= 1", f"model.hidden_layers[{position}]")
    _require(config.model.cosineScale > 0, "debe ser positivo", "model.cosine_scale")

    train = config.train
    _require(train.epochsStage1 >= 1, "debe ser >= 1", "train.epochs_stage1")
    _require(train.epochsStage2 >= 1, "debe ser >= 1", "train.epochs_stage2")
    _require(train.lrStage1 > 0, "debe ser positivo", "train.lr_stage1")
    _require(train.lrStage2 > 0, "debe ser positivo", "train.lr_stage2")
    _require(0.0 <= train.momentum < 1.0, "debe estar en [0, 1)", "train.momentum")
    _require(train.weightDecay >= 0, "no puede ser negativo", "train.weight_decay")
    _require(train.batchSize >= 1, "debe ser >= 1", "train.batch_size")
    _require(
        all(a < b for a, b in zip(train.milestones, train.milestones[1:])),
        "deben ser estrictamente crecientes",
        "train.milestones",
    )
    _require(
        all(0 <= milestone < train.epochsStage1 for milestone in train.milestones),
        "deben estar en [0, epochs_stage1)",
        "train.milestones",
    )
    _require(train.aux.temperature > 0, "debe ser positiva", "train.aux.temperature")
    _require(train.aux.lambdaBase >= 0, "no puede ser negativo", "train.aux.lambda_base")

    _require(len(config.seeds) >= 1, "se requiere al menos una semilla", "seeds")
    _require(len(set(config.seeds)) == len(config.seeds), "las semillas no pueden repetirse", "seeds")
    for position, seed in enumerate(config.seeds):
        _require(seed >= 0, "no puede ser negativa", f"seeds[{position}]")
    _require(bool(config.outputDir), "no puede estar vacío", "output_dir")

    resolve_strategy(config)
    return config


def parse_config_dict(payload: Mapping[str, Any]) -> ExperimentConfig:
    """Build and validate an ``ExperimentConfig`` from already-decoded data."""

    return validate_config(_build_dataclass(ExperimentConfig, payload, ""))


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read ``path`` (JSON or YAML) into a validated ``ExperimentConfig``."""

    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"No fue posible leer la configuración '{source}': {exc}") from exc
    try:
        if source.suffix.lower() in YAML_SUFFIXES:
            payload: Optional[Any] = yaml.safe_load(text)
        else:
            payload = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"La configuración '{source}' no es válida: {exc}") from exc
    config = parse_config_dict(payload if payload is not None else {})
    logger.debug("Configuración cargada desde %s", source)
    return config
