"""
Selection models for UniDA3D

Budgets, scoring strategies and the ordered selection produced by sampling.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Union

import numpy as np

from src.core.errors import ArgumentError, ShapeError


class ScoringStrategy(Enum):
    """How frames are scored before the top-B cut"""
    CROSS_MODAL = "cross_modal"
    TWO_D_ONLY = "two_d_only"
    THREE_D_ONLY = "three_d_only"
    AVERAGE_2D_3D = "average_2d_3d"
    RANDOM = "random"

    @classmethod
    def from_string(cls, value: str) -> "ScoringStrategy":
        """Create ScoringStrategy from string value"""
        for strategy in cls:
            if strategy.value == value.lower():
                return strategy
        raise ArgumentError(f"unknown scoring strategy {value!r}")


class BudgetKind(Enum):
    COUNT = "count"
    FRACTION = "fraction"


@dataclass(frozen=True)
class Budget:
    """
    Annotation / sampling budget, either an absolute frame count or a
    fraction of the domain size.
    """
    kind: BudgetKind
    value: float

    def __post_init__(self):
        if self.kind is BudgetKind.COUNT:
            if self.value != int(self.value) or self.value < 1:
                raise ArgumentError(f"count budget must be a positive integer, got {self.value}")
        elif not 0.0 < self.value <= 1.0:
            raise ArgumentError(f"fraction budget must lie in (0, 1], got {self.value}")

    @classmethod
    def count(cls, n: int) -> "Budget":
        return cls(BudgetKind.COUNT, n)

    @classmethod
    def fraction(cls, p: float) -> "Budget":
        return cls(BudgetKind.FRACTION, p)

    @classmethod
    def parse(cls, value: Union[int, float, str, "Budget"]) -> "Budget":
        """
        Interpret a config value: integers are counts, reals in (0, 1] and
        strings ending in '%' are fractions.
        """
        if isinstance(value, Budget):
            return value
        if isinstance(value, str):
            text = value.strip()
            if text.endswith("%"):
                return cls.fraction(float(text[:-1]) / 100.0)
            value = float(text) if any(ch in text for ch in ".eE") else int(text)
        if isinstance(value, bool):
            raise ArgumentError(f"invalid budget {value!r}")
        if isinstance(value, int):
            return cls.count(value)
        if isinstance(value, float) and 0.0 < value <= 1.0:
            return cls.fraction(value)
        raise ArgumentError(f"invalid budget {value!r}")

    def resolve(self, domain_size: int) -> int:
        """
        Number of frames to select from a domain of the given size.

        Fractions resolve by floor with a minimum of 1.

        Raises:
            ArgumentError: if the resolved count exceeds the domain size
        """
        if domain_size < 1:
            raise ArgumentError("cannot resolve a budget over an empty domain")
        if self.kind is BudgetKind.COUNT:
            n = int(self.value)
        else:
            n = max(1, int(np.floor(self.value * domain_size + 1e-9)))
        if n > domain_size:
            raise ArgumentError(f"budget {n} exceeds the {domain_size} available frames")
        return n

    def __str__(self) -> str:
        if self.kind is BudgetKind.COUNT:
            return str(int(self.value))
        return f"{self.value:g}"


@dataclass
class SelectionResult:
    """
    Ordered selection Z.

    Attributes:
        frame_ids: selected ids, best first
        scores: scores aligned with frame_ids (non-increasing)
        budget: resolved budget |Z|
        strategy: scoring strategy tag
    """
    frame_ids: List[int]
    scores: List[float]
    budget: int
    strategy: ScoringStrategy = ScoringStrategy.CROSS_MODAL

    def __post_init__(self):
        """Validate fields after initialization"""
        if len(self.frame_ids) != len(self.scores):
            raise ShapeError("selection ids and scores differ in length")
        if len(self.frame_ids) != self.budget:
            raise ArgumentError(f"selection holds {len(self.frame_ids)} ids for budget {self.budget}")
        if len(set(self.frame_ids)) != len(self.frame_ids):
            raise ArgumentError("selection ids must be unique")
        if any(a < b for a, b in zip(self.scores, self.scores[1:])):
            raise ArgumentError("selection scores must be non-increasing")

    def __len__(self) -> int:
        return len(self.frame_ids)

    def __contains__(self, frame_id: int) -> bool:
        return frame_id in self.frame_ids

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frame_ids": list(self.frame_ids),
            "scores": list(self.scores),
            "budget": self.budget,
            "strategy": self.strategy.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SelectionResult":
        return cls(
            frame_ids=[int(i) for i in data["frame_ids"]],
            scores=[float(s) for s in data["scores"]],
            budget=int(data["budget"]),
            strategy=ScoringStrategy.from_string(data["strategy"]),
        )
