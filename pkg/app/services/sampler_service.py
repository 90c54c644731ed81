"""Mini-batch samplers: the instance-balanced shuffle and the class-balanced two-level draw."""

from __future__ import annotations

import logging
from typing import Dict, Iterator, List, Sequence

import numpy as np


logger = logging.getLogger(__name__)


class SamplerServiceError(RuntimeError):
    """Raised when a sampler cannot be built."""


class SamplerConfigurationError(SamplerServiceError):
    """Raised for empty data, empty class pools or a non-positive batch size."""


def _check_batch_size(batch_size: int) -> None:
    if batch_size < 1:
        raise SamplerConfigurationError("batch_size debe ser >= 1.")


def instance_balanced_batches(
    data: Sequence[int],
    batch_size: int,
    seed: int,
    epoch: int,
) -> Iterator[List[int]]:
    """Yield one seeded permutation of ``data`` per ``(seed, epoch)`` in chunks of ``batch_size``.

    Every example appears exactly once; the last batch may be short.
    """

    _check_batch_size(batch_size)
    if len(data) == 0:
        raise SamplerConfigurationError("No hay datos para muestrear.")
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(len(data))
    for start in range(0, len(order), batch_size):
        yield [int(data[position]) for position in order[start:start + batch_size]]


def class_balanced_batches(
    per_class_pools: Dict[int, Sequence[int]],
    batch_size: int,
    steps: int,
    seed: int,
) -> Iterator[List[int]]:
    """Yield ``steps`` batches; each slot picks a class uniformly, then an example uniformly within it.

    Draws are with replacement. Classes are visited in ascending id order so the stream
    depends only on the pools and the seed.
    """

    _check_batch_size(batch_size)
    if not per_class_pools:
        raise SamplerConfigurationError("No hay clases para el muestreo balanceado.")
    empty = [class_id for class_id in sorted(per_class_pools) if len(per_class_pools[class_id]) == 0]
    if empty:
        raise SamplerConfigurationError(f"La clase {empty[0]} no tiene ejemplos en el conjunto balanceado.")

    class_ids = sorted(per_class_pools)
    pools = [list(per_class_pools[class_id]) for class_id in class_ids]
    rng = np.random.default_rng(seed)
    for _ in range(steps):
        picked_classes = rng.integers(0, len(class_ids), size=batch_size)
        batch = []
        for class_position in picked_classes:
            pool = pools[int(class_position)]
            batch.append(int(pool[int(rng.integers(0, len(pool)))]))
        yield batch
