"""
Evaluator Service

Segmentation quality of the 2D, 3D and fused heads on held-out frames.
"""

from typing import List, Sequence

from src.core.errors import ArgumentError, EmptyProjectionError
from src.core.losses import softmax
from src.core.metrics import confusion, miou
from src.core.network import UniDAModel
from src.infrastructure.logger import get_logger, log_exception
from src.models.frame import Frame
from src.models.report import HEADS, ConfusionMatrix, HeadResult

logger = get_logger(__name__)


@log_exception(logger)
def evaluate_model(model: UniDAModel, frames: Sequence[Frame]) -> List[HeadResult]:
    """
    Accumulate one confusion matrix per head over all frames, then mIoU.

    Points are evaluated where they project into the image; frames are
    visited in ascending id order and a frame with no projecting point is
    skipped with a warning.

    Returns:
        HeadResults for 2d, 3d and fused, in that order

    Raises:
        ArgumentError: if frames is empty
        UndefinedMetricError: if no frame holds a labeled projected point
    """
    if not frames:
        raise ArgumentError("cannot evaluate on an empty split")
    c = model.params.num_classes
    totals = {head: ConfusionMatrix.zeros(c) for head in HEADS}

    for frame in sorted(frames, key=lambda f: f.id):
        try:
            out = model.forward(frame)
        except EmptyProjectionError:
            logger.warning(f"Frame {frame.id}: no point projects into the image, skipped")
            continue
        gt = frame.labels[out.point_index]
        preds = {
            "2d": softmax(out.logits2d.value).argmax(axis=1),
            "3d": softmax(out.logits3d.value).argmax(axis=1),
            "fused": out.fused_probs().argmax(axis=1),
        }
        for head in HEADS:
            totals[head] = totals[head] + confusion(gt, preds[head], c)

    results = []
    for head in HEADS:
        per_class, mean = miou(totals[head])
        results.append(HeadResult(head=head, per_class_iou=per_class, miou=mean, confusion=totals[head]))
    summary = ", ".join(f"{r.head} mIoU {r.miou:.4f}" for r in results)
    logger.info(f"Evaluation on {len(frames)} frames: {summary}")
    return results
