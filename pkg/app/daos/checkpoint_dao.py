"""Data access layer for versioned JSON model checkpoints."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from app.dtos.model_dto import HeadKind, IncrementalModel
from app.services.numerics_service import ParamSet


logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "ltcil-model"
CHECKPOINT_VERSION = 1


class CheckpointDAOError(RuntimeError):
    """Raised when a checkpoint cannot be written or read back."""


class CheckpointDAO:
    """Serialize ``IncrementalModel`` instances so reloads reproduce forward outputs bit-exactly.

    Floats are written with ``repr`` precision, which round-trips every float64.
    """

    def to_dict(self, model: IncrementalModel) -> Dict[str, Any]:
        params = model.params
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "architecture": list(model.architecture),
            "head_kind": model.headKind.value,
            "head_widths": list(model.headWidths),
            "class_ids": list(model.classIds),
            "cosine_scale_init": model.cosineScaleInit,
            "parameters": [
                {
                    "name": name,
                    "shape": list(params.value(name).shape),
                    "trainable": params.is_trainable(name),
                    "values": [float(value) for value in params.value(name).ravel()],
                }
                for name in params.names()
            ],
            "class_means": {
                str(class_id): [float(value) for value in mean]
                for class_id, mean in sorted(model.classMeans.items())
            },
        }

    def from_dict(self, payload: Dict[str, Any]) -> IncrementalModel:
        if payload.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointDAOError("El archivo no es un checkpoint de modelo reconocido.")
        if payload.get("version") != CHECKPOINT_VERSION:
            raise CheckpointDAOError(f"Versión de checkpoint no soportada: {payload.get('version')}.")
        try:
            params = ParamSet()
            for entry in payload["parameters"]:
                value = np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
                params.add(entry["name"], value, bool(entry["trainable"]))
            return IncrementalModel(
                params=params,
                architecture=[int(width) for width in payload["architecture"]],
                headKind=HeadKind(payload["head_kind"]),
                headWidths=[int(width) for width in payload["head_widths"]],
                classIds=[int(class_id) for class_id in payload["class_ids"]],
                classMeans={
                    int(class_id): np.array(mean, dtype=np.float64)
                    for class_id, mean in payload.get("class_means", {}).items()
                },
                cosineScaleInit=float(payload["cosine_scale_init"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointDAOError(f"Checkpoint incompleto o corrupto: {exc}") from exc

    def save(self, model: IncrementalModel, path: Union[str, Path]) -> Path:
        destination = Path(path)
        try:
            destination.parent.mkdir(parents=True, exist_ok=True)
            destination.write_text(json.dumps(self.to_dict(model)), encoding="utf-8")
        except OSError as exc:
            raise CheckpointDAOError(f"No fue posible guardar el checkpoint '{destination}': {exc}") from exc
        logger.debug("Checkpoint guardado en %s", destination)
        return destination

    def load(self, path: Union[str, Path]) -> IncrementalModel:
        source = Path(path)
        try:
            payload = json.loads(source.read_text(encoding="utf-8"))
        except OSError as exc:
            raise CheckpointDAOError(f"No fue posible leer el checkpoint '{source}': {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CheckpointDAOError(f"El checkpoint '{source}' no es JSON válido: {exc}") from exc
        return self.from_dict(payload)
