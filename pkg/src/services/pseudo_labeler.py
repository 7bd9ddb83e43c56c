"""
Pseudo-Labeler Service

PL labels every target frame; APL labels only the frames of a selection.
A point keeps its argmax label when its confidence exceeds the q-quantile of
the confidences of all points predicted as the same class.
"""

from typing import Dict, List, Sequence

import numpy as np

from config import config
from src.core.errors import ArgumentError, EmptyProjectionError
from src.core.losses import softmax
from src.core.network import UniDAModel
from src.infrastructure.logger import get_logger, log_exception
from src.models.frame import Frame
from src.models.pseudo_label import PseudoLabeledFrame
from src.models.selection import SelectionResult

logger = get_logger(__name__)


def class_thresholds(confidence: np.ndarray, predicted: np.ndarray, num_classes: int, quantile: float) -> np.ndarray:
    """
    Per-class q-quantile of confidence over the points predicted as that class.

    Classes never predicted get +inf.
    """
    thresholds = np.full(num_classes, np.inf)
    for c in range(num_classes):
        values = confidence[predicted == c]
        if values.size:
            thresholds[c] = np.quantile(values, quantile)
    return thresholds


def keep_mask(confidence: np.ndarray, predicted: np.ndarray, thresholds: np.ndarray, quantile: float) -> np.ndarray:
    """Points above their class threshold (every point at q = 0)"""
    if quantile <= 0.0:
        return np.ones(confidence.shape, dtype=bool)
    return confidence > thresholds[predicted]


class PseudoLabeler:
    """
    Service producing confidence-filtered pseudo-labels.

    Handles:
    - Branch fusion of predictions (or the 3D branch alone)
    - Per-class quantile thresholds pooled over the labeled frames
    - Restriction to an active selection (APL)
    """

    def __init__(self, model: UniDAModel, quantile: float = config.PSEUDO_LABEL_QUANTILE, fusion: bool = True):
        if not 0.0 <= quantile <= 1.0:
            raise ArgumentError(f"quantile must lie in [0, 1], got {quantile}")
        self.model = model
        self.quantile = quantile
        self.fusion = fusion

    def _predict(self, frame: Frame):
        out = self.model.forward(frame)
        if self.fusion:
            probs = out.fused_probs()
        else:
            probs = softmax(out.logits3d.value)
        return out.point_index, probs.max(axis=1), probs.argmax(axis=1)

    @log_exception(logger)
    def pseudo_label(self, frames: Sequence[Frame]) -> List[PseudoLabeledFrame]:
        """
        Pseudo-label every frame.

        Returns:
            One PseudoLabeledFrame per input frame, in input order. Points
            outside the image and filtered points carry the ignore label.
        """
        predictions: Dict[int, tuple] = {}
        for frame in frames:
            try:
                predictions[frame.id] = self._predict(frame)
            except EmptyProjectionError:
                logger.warning(f"Frame {frame.id}: no point projects into the image")

        num_classes = self.model.params.num_classes
        if predictions:
            all_conf = np.concatenate([p[1] for p in predictions.values()])
            all_pred = np.concatenate([p[2] for p in predictions.values()])
        else:
            all_conf = np.zeros(0)
            all_pred = np.zeros(0, dtype=np.int64)
        thresholds = class_thresholds(all_conf, all_pred, num_classes, self.quantile)

        results = []
        for frame in frames:
            labels = np.full(frame.num_points, config.IGNORE_LABEL, dtype=np.int32)
            confidence = np.zeros(frame.num_points)
            if frame.id in predictions:
                index, conf, pred = predictions[frame.id]
                keep = keep_mask(conf, pred, thresholds, self.quantile)
                labels[index[keep]] = pred[keep]
                confidence[index] = conf
            empty = not np.any(labels != config.IGNORE_LABEL)
            if empty:
                logger.warning(f"Frame {frame.id}: no point passed the confidence filter")
            results.append(PseudoLabeledFrame(frame.id, labels, confidence, empty=empty))

        kept = sum(r.num_labeled for r in results)
        logger.info(f"Pseudo-labeled {len(results)} frames, {kept} points kept (q={self.quantile})")
        return results

    def apl(self, frames: Sequence[Frame], selection: SelectionResult) -> List[PseudoLabeledFrame]:
        """
        Pseudo-label only the selected frames, in selection order.

        Raises:
            ArgumentError: if a selected id is not among the frames
        """
        by_id = {f.id: f for f in frames}
        missing = [i for i in selection.frame_ids if i not in by_id]
        if missing:
            raise ArgumentError(f"selected frames not available: {missing}")
        return self.pseudo_label([by_id[i] for i in selection.frame_ids])


def pseudo_label(
    frames: Sequence[Frame],
    model: UniDAModel,
    quantile: float = config.PSEUDO_LABEL_QUANTILE,
    fusion: bool = True,
) -> List[PseudoLabeledFrame]:
    return PseudoLabeler(model, quantile, fusion).pseudo_label(frames)


def apl(
    frames: Sequence[Frame],
    model: UniDAModel,
    selection: SelectionResult,
    quantile: float = config.PSEUDO_LABEL_QUANTILE,
    fusion: bool = True,
) -> List[PseudoLabeledFrame]:
    return PseudoLabeler(model, quantile, fusion).apl(frames, selection)
