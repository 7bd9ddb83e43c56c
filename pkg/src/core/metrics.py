"""
Segmentation and domain-classification metrics.

IoU(i) = TP(i) / (TP(i) + FP(i) + FN(i)); mIoU averages over classes whose
union is non-empty.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import roc_auc_score

from config import config
from src.core.errors import ArgumentError, BoundsError, ShapeError, UndefinedMetricError
from src.models.report import ConfusionMatrix


def confusion(
    gt: np.ndarray,
    pred: np.ndarray,
    num_classes: int,
    ignore_label: int = config.IGNORE_LABEL,
) -> ConfusionMatrix:
    """
    Count (ground truth, prediction) pairs over non-ignored points.

    Raises:
        ShapeError: on length mismatch
        BoundsError: if a prediction or kept label is outside [0, C)
    """
    gt = np.asarray(gt, dtype=np.int64).reshape(-1)
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    if gt.shape != pred.shape:
        raise ShapeError(f"{gt.size} labels vs {pred.size} predictions")
    keep = gt != ignore_label
    gt, pred = gt[keep], pred[keep]
    if gt.size and (gt.min() < 0 or gt.max() >= num_classes):
        raise BoundsError(f"ground-truth label outside [0, {num_classes})")
    if pred.size and (pred.min() < 0 or pred.max() >= num_classes):
        raise BoundsError(f"prediction outside [0, {num_classes})")
    counts = np.bincount(gt * num_classes + pred, minlength=num_classes * num_classes)
    return ConfusionMatrix(counts.reshape(num_classes, num_classes))


def miou(cm: ConfusionMatrix) -> Tuple[List[Optional[float]], float]:
    """
    Per-class IoU and their mean over classes with non-zero union.

    Returns:
        (IoU per class with None for zero-union classes, mean IoU)

    Raises:
        UndefinedMetricError: if every class has zero union
    """
    counts = cm.counts
    tp = np.diag(counts).astype(np.float64)
    union = counts.sum(axis=0) + counts.sum(axis=1) - np.diag(counts)
    present = union > 0
    if not np.any(present):
        raise UndefinedMetricError("mIoU undefined: every class has zero union")
    ious: List[Optional[float]] = [
        float(tp[i] / union[i]) if present[i] else None for i in range(cm.num_classes)
    ]
    return ious, float(np.mean(tp[present] / union[present]))


def domain_accuracy(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> float:
    """Fraction of frames whose thresholded score matches the domain label"""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.size == 0:
        raise ShapeError(f"{scores.size} scores vs {labels.size} labels")
    return float(np.mean((scores >= threshold).astype(np.int64) == labels))


def domain_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """
    ROC AUC of frame scores against domain labels (target = positive).

    Raises:
        ArgumentError: if only one domain is present
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(np.unique(labels)) < 2:
        raise ArgumentError("domain AUC needs frames from both domains")
    return float(roc_auc_score(labels, np.asarray(scores, dtype=np.float64)))
