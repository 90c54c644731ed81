"""Data transfer objects for the exemplar replay memory."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List


class BudgetMode(str, Enum):
    """Enumerate how the memory budget is interpreted."""

    TOTAL = "total"
    PER_CLASS = "per_class"


class SelectionKind(str, Enum):
    """Enumerate exemplar selection rules."""

    HERDING = "herding"
    RANDOM = "random"


@dataclass
class ExemplarMemory:
    """Bounded replay store: class id -> ordered exemplar ids.

    ``budget`` is the total capacity in ``TOTAL`` mode or the fixed per-class count in
    ``PER_CLASS`` mode.
    """

    mode: BudgetMode
    budget: int
    selection: SelectionKind = SelectionKind.HERDING
    seed: int = 0
    store: Dict[int, List[int]] = field(default_factory=dict)

    def total_stored(self) -> int:
        return sum(len(indices) for indices in self.store.values())

    def all_indices(self) -> List[int]:
        """Return every stored id, classes in ascending order."""

        return [index for label in sorted(self.store) for index in self.store[label]]

    def dump(self) -> Dict[int, List[int]]:
        return {label: list(self.store[label]) for label in sorted(self.store)}
