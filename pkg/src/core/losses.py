"""
Segmentation loss and prediction fusion
"""

import numpy as np

from config import config
from src.core.autodiff import Tensor, add, cross_entropy
from src.core.errors import NoValidPointsError, ShapeError


def seg_loss(logits: Tensor, labels: np.ndarray, ignore_label: int = config.IGNORE_LABEL) -> Tensor:
    """
    Cross entropy averaged over non-ignored points.

    Args:
        logits: N×C class scores
        labels: N class ids or the ignore sentinel

    Raises:
        NoValidPointsError: if every label is ignored
        ShapeError / BoundsError: on malformed labels
    """
    labels = np.asarray(labels)
    if not np.any(labels != ignore_label):
        raise NoValidPointsError(f"all {labels.size} labels are ignored")
    return cross_entropy(logits, labels, ignore_label)


def branch_loss(
    logits2d: Tensor,
    logits3d: Tensor,
    labels: np.ndarray,
    ignore_label: int = config.IGNORE_LABEL,
) -> Tensor:
    """L_seg of the 2D branch plus L_seg of the 3D branch on the same points"""
    return add(seg_loss(logits2d, labels, ignore_label), seg_loss(logits3d, labels, ignore_label))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a plain array"""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def fuse_predictions(logits2d: np.ndarray, logits3d: np.ndarray) -> np.ndarray:
    """
    Softmax average fusion: (softmax(l2d) + softmax(l3d)) / 2 per point.

    Raises:
        ShapeError: if the two logit matrices differ in shape
    """
    logits2d = np.asarray(logits2d, dtype=np.float64)
    logits3d = np.asarray(logits3d, dtype=np.float64)
    if logits2d.shape != logits3d.shape or logits2d.ndim != 2:
        raise ShapeError(f"logit shapes differ: {logits2d.shape} vs {logits3d.shape}")
    return 0.5 * (softmax(logits2d) + softmax(logits3d))
