"""
Pseudo-labeled frame model for UniDA3D
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from config import config
from src.core.errors import ShapeError
from src.models.frame import Frame


@dataclass
class PseudoLabeledFrame:
    """
    Pseudo-labels for one target frame.

    Attributes:
        frame_id: id of the labeled frame
        labels: per raw point class id, or the ignore sentinel
        confidence: per raw point confidence in (0, 1]; 0 where no
            prediction was made (points outside the image)
        empty: True when no point survived the confidence filter
    """
    frame_id: int
    labels: np.ndarray
    confidence: np.ndarray
    empty: bool = False

    def __post_init__(self):
        """Validate fields after initialization"""
        self.labels = np.asarray(self.labels, dtype=np.int32)
        self.confidence = np.asarray(self.confidence, dtype=np.float64)
        if self.labels.shape != self.confidence.shape:
            raise ShapeError("pseudo-labels and confidences differ in length")
        labeled = self.labels != config.IGNORE_LABEL
        if np.any(self.confidence[labeled] <= 0.0):
            raise ShapeError("every pseudo-labeled point needs a positive confidence")

    @property
    def num_labeled(self) -> int:
        return int(np.sum(self.labels != config.IGNORE_LABEL))

    def apply(self, frame: Frame) -> Frame:
        """
        The frame with its labels replaced by the pseudo-labels.

        Raises:
            ShapeError: if the frame does not match
        """
        if frame.id != self.frame_id or frame.num_points != len(self.labels):
            raise ShapeError(f"pseudo-labels of frame {self.frame_id} do not fit frame {frame.id}")
        return frame.with_labels(self.labels)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frame_id": self.frame_id,
            "num_labeled": self.num_labeled,
            "num_points": int(len(self.labels)),
            "empty": self.empty,
        }
