"""
Evaluation models for UniDA3D

Confusion counts per head and the report emitted at the end of a task run.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.errors import ShapeError

HEADS = ("2d", "3d", "fused")


@dataclass
class ConfusionMatrix:
    """
    C×C counts; rows are ground-truth classes, columns predicted classes.

    Ignored points are never counted.
    """
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ShapeError(f"confusion matrix must be square, got {self.counts.shape}")
        if np.any(self.counts < 0):
            raise ShapeError("confusion counts must be non-negative")

    @classmethod
    def zeros(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise ShapeError("cannot add confusion matrices of different class counts")
        return ConfusionMatrix(self.counts + other.counts)

    def to_list(self) -> List[List[int]]:
        return self.counts.tolist()


@dataclass
class HeadResult:
    """IoU per class (None where the class has zero union) and their mean"""
    head: str
    per_class_iou: List[Optional[float]]
    miou: float
    confusion: ConfusionMatrix

    def to_dict(self) -> Dict[str, Any]:
        return {
            "head": self.head,
            "miou": self.miou,
            "per_class_iou": self.per_class_iou,
            "confusion": self.confusion.to_list(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HeadResult":
        return cls(
            head=data["head"],
            per_class_iou=list(data["per_class_iou"]),
            miou=float(data["miou"]),
            confusion=ConfusionMatrix(np.asarray(data["confusion"])),
        )


@dataclass
class EvaluationReport:
    """
    Outcome of one task run.

    Attributes:
        task: task name (uda / ufda / ada)
        seed: master seed
        config_hash: hash of the validated experiment config
        config: echo of the experiment config
        heads: results for the 2D, 3D and fused heads, in that order
        frame_counts: number of frames seen by each stage
        selections: selection summaries keyed by stage
        oracle_frame_ids: target frames whose labels the oracle revealed (ADA)
        version: report format version
    """
    task: str
    seed: int
    config_hash: str
    heads: List[HeadResult]
    config: Dict[str, Any] = field(default_factory=dict)
    frame_counts: Dict[str, int] = field(default_factory=dict)
    selections: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    oracle_frame_ids: List[int] = field(default_factory=list)
    version: int = 1

    def head(self, name: str) -> HeadResult:
        for h in self.heads:
            if h.head == name:
                return h
        raise KeyError(name)

    @property
    def miou(self) -> Dict[str, float]:
        """mIoU triple keyed by head"""
        return {h.head: h.miou for h in self.heads}

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary with stable key order"""
        return {
            "version": self.version,
            "task": self.task,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "miou": self.miou,
            "heads": [h.to_dict() for h in self.heads],
            "frame_counts": dict(sorted(self.frame_counts.items())),
            "selections": {k: self.selections[k] for k in sorted(self.selections)},
            "oracle_frame_ids": list(self.oracle_frame_ids),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvaluationReport":
        """Create from dictionary"""
        return cls(
            task=data["task"],
            seed=int(data["seed"]),
            config_hash=data["config_hash"],
            heads=[HeadResult.from_dict(h) for h in data["heads"]],
            config=data.get("config", {}),
            frame_counts=data.get("frame_counts", {}),
            selections=data.get("selections", {}),
            oracle_frame_ids=list(data.get("oracle_frame_ids", [])),
            version=int(data.get("version", 1)),
        )
