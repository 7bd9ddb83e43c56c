"""
Discriminator Trainer Service

Trains the domain discriminators on frozen features. Features are computed
once per frame and cached; only discriminator weights are optimised.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import config
from src.core.autodiff import Tape, Tensor, add, scale
from src.core.discriminator import bce_domain_loss, point_probabilities
from src.core.errors import ArgumentError, EmptyProjectionError
from src.core.metrics import domain_accuracy, domain_auc
from src.core.network import UniDAModel
from src.core.optim import Adam
from src.infrastructure.logger import get_logger, log_exception
from src.models.frame import Frame
from src.models.history import TrainingHistory
from src.models.params import DISC_CROSS_MODAL, DISC_THREE_D, DISC_TWO_D, named_tensors
from src.models.task import DiscriminatorConfig

logger = get_logger(__name__)

SLOTS = (DISC_CROSS_MODAL, DISC_TWO_D, DISC_THREE_D)


class FeatureCache:
    """
    Frozen per-frame discriminator inputs.

    For every frame: the interacted concatenation [f̂2d, f̂3d] for the
    cross-modal slot and the raw encoder features for the single-modality
    slots. Point subsets are seeded by (seed, frame id), so a frame's cached
    features do not depend on the order frames are visited in.
    """

    def __init__(self, model: UniDAModel, max_points: Optional[int] = None, seed: int = 0):
        self.model = model
        self.max_points = max_points
        self.seed = seed
        self._features: Dict[int, Dict[str, np.ndarray]] = {}

    def features(self, frame: Frame) -> Dict[str, np.ndarray]:
        """
        Slot → N×width array for one frame.

        Raises:
            EmptyProjectionError: if nothing projects into the image
        """
        if frame.id not in self._features:
            rng = np.random.default_rng([self.seed, frame.id])
            raw = self.model.encode(frame, self.max_points, rng)
            enhanced = self.model.interact(raw)
            self._features[frame.id] = {
                DISC_CROSS_MODAL: np.concatenate([enhanced.f2d.value, enhanced.f3d.value], axis=1),
                DISC_TWO_D: raw.f2d.value.copy(),
                DISC_THREE_D: raw.f3d.value.copy(),
            }
        return self._features[frame.id]

    def warm(self, frames: Sequence[Frame]) -> List[Frame]:
        """Compute features for all frames; returns the frames that project"""
        usable = []
        for frame in frames:
            try:
                self.features(frame)
                usable.append(frame)
            except EmptyProjectionError:
                logger.warning(f"Frame {frame.id}: no point projects into the image, skipped")
        return usable

    def __len__(self) -> int:
        return len(self._features)


def frame_scores(
    frames: Sequence[Frame],
    model: UniDAModel,
    slot: str,
    cache: FeatureCache,
) -> List[Tuple[int, float]]:
    """(frame id, mean per-point target probability) under one discriminator"""
    disc = model.params.discriminator(slot)
    scores = []
    for frame in frames:
        probs = point_probabilities(Tensor(cache.features(frame)[slot]), disc)
        scores.append((frame.id, float(probs.value.mean())))
    return scores


class DiscriminatorTrainer:
    """
    Service fitting one discriminator slot to separate source (0) from
    target (1) frames.

    Handles:
    - Caching frozen features of both domains
    - Balanced source / target mini-batches
    - Adam with poly schedule over the discriminator weights only
    """

    def __init__(
        self,
        model: UniDAModel,
        disc_config: Optional[DiscriminatorConfig] = None,
        cache: Optional[FeatureCache] = None,
        seed: int = 0,
    ):
        self.model = model
        self.cfg = disc_config or DiscriminatorConfig()
        self.cache = cache or FeatureCache(model, self.cfg.max_points, seed)

    def _frame_loss(self, frame: Frame, slot: str, label: int) -> Tensor:
        probs = point_probabilities(Tensor(self.cache.features(frame)[slot]), self.model.params.discriminator(slot))
        return bce_domain_loss(probs, label)

    def _mean_loss(self, frames: Sequence[Frame], slot: str, label: int) -> Tensor:
        total = self._frame_loss(frames[0], slot, label)
        for frame in frames[1:]:
            total = add(total, self._frame_loss(frame, slot, label))
        return scale(total, 1.0 / len(frames))

    @log_exception(logger)
    def train(
        self,
        source_frames: Sequence[Frame],
        target_frames: Sequence[Frame],
        slot: str = DISC_CROSS_MODAL,
        iterations: Optional[int] = None,
        seed: int = 0,
    ) -> TrainingHistory:
        """
        Fit the discriminator in `slot`.

        Each iteration draws equal-size batches from both domains; the loss
        is the mean of the source BCE (label 0) and the target BCE (label 1).

        Returns:
            History with loss, lr and batch domain accuracy per iteration

        Raises:
            ArgumentError: if either domain has no usable frame or the slot is unknown
        """
        if slot not in SLOTS:
            raise ArgumentError(f"unknown discriminator slot {slot!r}")
        source = self.cache.warm(source_frames)
        target = self.cache.warm(target_frames)
        if not source or not target:
            raise ArgumentError(
                f"discriminator training needs frames of both domains "
                f"(source {len(source)}, target {len(target)})"
            )

        iterations = iterations or self.cfg.iterations
        params = [t for _, t in named_tensors(self.model.params.discriminator(slot))]
        optimizer = Adam(params, base_lr=self.cfg.lr, max_iter=iterations)
        rng = np.random.default_rng(seed)
        history = TrainingHistory(stage=f"discriminator.{slot}")
        size = min(self.cfg.batch_size, len(source), len(target))
        logger.info(
            f"[disc:{slot}] {len(source)} source / {len(target)} target frames, "
            f"batch {size}, {iterations} iterations"
        )

        for it in range(iterations):
            src_batch = [source[i] for i in rng.choice(len(source), size=size, replace=False)]
            tgt_batch = [target[i] for i in rng.choice(len(target), size=size, replace=False)]
            with Tape() as tape:
                loss = scale(add(
                    self._mean_loss(src_batch, slot, config.SOURCE_DOMAIN_LABEL),
                    self._mean_loss(tgt_batch, slot, config.TARGET_DOMAIN_LABEL),
                ), 0.5)
            tape.backward(loss, params=params)
            lr = optimizer.step(it)

            scores = [s for _, s in frame_scores(src_batch + tgt_batch, self.model, slot, self.cache)]
            labels = [config.SOURCE_DOMAIN_LABEL] * size + [config.TARGET_DOMAIN_LABEL] * size
            history.record(float(loss.value), lr, accuracy=domain_accuracy(scores, labels))
            if (it + 1) % 100 == 0 or it == iterations - 1:
                logger.info(
                    f"[disc:{slot}] iter {it + 1}/{iterations} loss {np.mean(history.losses[-100:]):.4f} "
                    f"acc {np.mean(history.metrics['accuracy'][-100:]):.3f}"
                )

        self.model.trained_discriminators.add(slot)
        return history

    def evaluate(
        self,
        source_frames: Sequence[Frame],
        target_frames: Sequence[Frame],
        slot: str = DISC_CROSS_MODAL,
    ) -> Dict[str, float]:
        """Held-out domain accuracy (threshold 0.5) and ROC AUC over frame scores"""
        source = self.cache.warm(source_frames)
        target = self.cache.warm(target_frames)
        scored = frame_scores(source + target, self.model, slot, self.cache)
        scores = [s for _, s in scored]
        labels = [config.SOURCE_DOMAIN_LABEL] * len(source) + [config.TARGET_DOMAIN_LABEL] * len(target)
        return {"accuracy": domain_accuracy(scores, labels), "auc": domain_auc(scores, labels)}


def train_discriminator(
    source_frames: Sequence[Frame],
    target_frames: Sequence[Frame],
    model: UniDAModel,
    disc_config: Optional[DiscriminatorConfig] = None,
    slot: str = DISC_CROSS_MODAL,
    seed: int = 0,
) -> TrainingHistory:
    """Train one discriminator slot of `model` in place"""
    trainer = DiscriminatorTrainer(model, disc_config, seed=seed)
    return trainer.train(source_frames, target_frames, slot, seed=seed)
