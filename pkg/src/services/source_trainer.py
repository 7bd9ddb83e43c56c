"""
Segmentation Trainer Service

Supervised training of both branches (source stage, fine-tuning on the
sampled source subset) and joint source/target self-training.
"""

from typing import List, Optional, Sequence

import numpy as np

from src.core.autodiff import Tape, Tensor, add, scale
from src.core.errors import ArgumentError, EmptyProjectionError, NoValidPointsError
from src.core.interaction import InteractionVariant
from src.core.losses import seg_loss
from src.core.network import UniDAModel
from src.core.optim import Adam
from src.infrastructure.logger import get_logger, log_exception
from src.models.frame import Frame
from src.models.history import TrainingHistory
from src.models.task import TrainConfig

logger = get_logger(__name__)


def has_valid_labels(frame: Frame, ignore_label: int = -1) -> bool:
    return bool(np.any(frame.labels != ignore_label))


class SegmentationTrainer:
    """
    Service optimising the segmentation objective L_2D + L_3D.

    Handles:
    - Drawing seeded mini-batches of frames and points
    - Building the per-batch loss on the tape
    - Adam updates with the poly schedule
    - Loss history and progress logging
    """

    def __init__(self, model: UniDAModel, train_config: Optional[TrainConfig] = None):
        """
        Initialize segmentation trainer.

        Args:
            model: network whose parameters are trained in place
            train_config: optimisation settings
        """
        self.model = model
        self.cfg = train_config or TrainConfig()

    def trainable(self) -> List[Tensor]:
        include = self.model.variant is not InteractionVariant.NONE
        return self.model.params.segmentation_tensors(include_interaction=include)

    def frame_loss(self, frame: Frame, rng: Optional[np.random.Generator]) -> Optional[Tensor]:
        """
        Weighted branch loss on one frame, or None when no labeled point is
        evaluated (all ignored after subsampling, or nothing projects).
        """
        try:
            out = self.model.forward(frame, self.cfg.max_points, rng)
        except EmptyProjectionError:
            logger.warning(f"Frame {frame.id}: no point projects into the image, skipped")
            return None
        labels = frame.labels[out.point_index]
        try:
            loss2d = seg_loss(out.logits2d, labels)
            loss3d = seg_loss(out.logits3d, labels)
        except NoValidPointsError:
            return None
        return add(scale(loss2d, self.cfg.loss_weight_2d), scale(loss3d, self.cfg.loss_weight_3d))

    def batch_loss(self, frames: Sequence[Frame], rng: np.random.Generator) -> Optional[Tensor]:
        """Mean frame loss over a seeded mini-batch"""
        size = min(self.cfg.batch_size, len(frames))
        picks = rng.choice(len(frames), size=size, replace=False)
        losses = [loss for loss in (self.frame_loss(frames[i], rng) for i in picks) if loss is not None]
        if not losses:
            return None
        total = losses[0]
        for loss in losses[1:]:
            total = add(total, loss)
        return scale(total, 1.0 / len(losses))

    def _run(
        self,
        stage: str,
        iterations: int,
        seed: int,
        objective,
    ) -> TrainingHistory:
        params = self.trainable()
        optimizer = Adam(
            params,
            base_lr=self.cfg.lr,
            max_iter=iterations,
            power=self.cfg.poly_power,
            beta1=self.cfg.beta1,
            beta2=self.cfg.beta2,
        )
        rng = np.random.default_rng(seed)
        history = TrainingHistory(stage=stage)

        for it in range(iterations):
            with Tape() as tape:
                loss = objective(rng)
            if loss is None:
                logger.debug(f"[{stage}] iteration {it}: no labeled points in batch, skipped")
                continue
            tape.backward(loss, params=params)
            lr = optimizer.step(it)
            history.record(float(loss.value), lr)
            if (it + 1) % self.cfg.log_every == 0 or it == iterations - 1:
                recent = np.mean(history.losses[-self.cfg.log_every:])
                logger.info(f"[{stage}] iter {it + 1}/{iterations} loss {recent:.4f} lr {lr:.2e}")
        return history

    @log_exception(logger)
    def train_source(
        self,
        frames: Sequence[Frame],
        iterations: Optional[int] = None,
        seed: int = 0,
        stage: str = "source",
    ) -> TrainingHistory:
        """
        Supervised training on labeled source frames.

        Args:
            frames: labeled source frames
            iterations: number of Adam steps (default: train.source_iterations)
            seed: batch and point sampling seed
            stage: name used in logs and history

        Returns:
            Loss history; parameters are updated in place

        Raises:
            ArgumentError: if no frame carries a label
        """
        usable = [f for f in frames if has_valid_labels(f)]
        if not usable:
            raise ArgumentError(f"{stage}: no labeled frames to train on")
        iterations = iterations or self.cfg.source_iterations
        logger.info(f"[{stage}] training on {len(usable)} frames for {iterations} iterations")
        return self._run(stage, iterations, seed, lambda rng: self.batch_loss(usable, rng))

    @log_exception(logger)
    def self_train(
        self,
        source_frames: Sequence[Frame],
        target_frames: Sequence[Frame],
        iterations: Optional[int] = None,
        seed: int = 0,
    ) -> TrainingHistory:
        """
        Joint objective: mean source loss plus mean target loss, weighted 1:1.

        Target frames carry ground-truth (oracle) or pseudo-labels. Frames
        whose labels are all ignored are dropped.

        Raises:
            ArgumentError: if either subset is empty
        """
        source = [f for f in source_frames if has_valid_labels(f)]
        target = [f for f in target_frames if has_valid_labels(f)]
        dropped = len(target_frames) - len(target)
        if dropped:
            logger.warning(f"[self_train] {dropped} target frames without labels skipped")
        if not source or not target:
            raise ArgumentError(
                f"self-training needs labeled frames in both subsets "
                f"(source {len(source)}, target {len(target)})"
            )
        iterations = iterations or self.cfg.self_train_iterations
        logger.info(
            f"[self_train] {len(source)} source + {len(target)} target frames, {iterations} iterations"
        )

        def objective(rng: np.random.Generator) -> Optional[Tensor]:
            src = self.batch_loss(source, rng)
            tgt = self.batch_loss(target, rng)
            if src is None or tgt is None:
                return src if tgt is None else tgt
            return add(src, tgt)

        return self._run("self_train", iterations, seed, objective)


def train_source(
    frames: Sequence[Frame],
    model: UniDAModel,
    train_config: Optional[TrainConfig] = None,
    iterations: Optional[int] = None,
    seed: int = 0,
) -> TrainingHistory:
    """Train `model` in place on labeled source frames"""
    return SegmentationTrainer(model, train_config).train_source(frames, iterations, seed)


def self_train(
    source_frames: Sequence[Frame],
    target_frames: Sequence[Frame],
    model: UniDAModel,
    train_config: Optional[TrainConfig] = None,
    iterations: Optional[int] = None,
    seed: int = 0,
) -> TrainingHistory:
    """Adapt `model` in place on labeled source plus (pseudo-)labeled target frames"""
    return SegmentationTrainer(model, train_config).self_train(
        source_frames, target_frames, iterations, seed
    )
