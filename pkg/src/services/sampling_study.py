"""
Sampling Study Service

Desk-scale checks of the sampling stage on one seed:
    - how many of the source frames picked by each scoring strategy are the
      hidden target-like frames mixed into the source set
    - how well a discriminator trained on a few-shot target subset separates
      the domains compared to one trained on the whole target train split
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from src.core.errors import ArgumentError
from src.infrastructure.logger import get_logger, log_exception
from src.models.dataset import SPLIT_TEST, SPLIT_TRAIN
from src.models.params import DISC_CROSS_MODAL
from src.models.selection import Budget, ScoringStrategy
from src.models.task import ExperimentConfig
from src.services.discriminator_trainer import DiscriminatorTrainer, FeatureCache
from src.services.sampler import REQUIRED_SLOTS, sample_source
from src.services.source_trainer import SegmentationTrainer
from src.services.task_runner import build_datasets, build_model, stage_seeds

logger = get_logger(__name__)

STUDY_STRATEGIES = (
    ScoringStrategy.CROSS_MODAL,
    ScoringStrategy.TWO_D_ONLY,
    ScoringStrategy.THREE_D_ONLY,
    ScoringStrategy.AVERAGE_2D_3D,
)
FULL_FRACTION = 1.0


def target_like_recall(selected: Sequence[int], flagged: Sequence[int]) -> float:
    """Share of selected frames that are target-like"""
    if not selected:
        raise ArgumentError("recall of an empty selection is undefined")
    return len(set(selected) & set(flagged)) / len(selected)


@dataclass
class SeedStudy:
    """
    Study results of one seed.

    Attributes:
        seed: master seed
        recall: target-like share of the source selection, per strategy value
        auc: held-out cross-modal domain AUC, per target fraction
    """
    seed: int
    recall: Dict[str, float] = field(default_factory=dict)
    auc: Dict[float, float] = field(default_factory=dict)

    def rows(self) -> List[list]:
        """(seed, measure, setting, value) rows"""
        rows = [[self.seed, "recall", name, value] for name, value in self.recall.items()]
        rows += [[self.seed, "auc", f"{p:g}", value] for p, value in self.auc.items()]
        return rows


@log_exception(logger)
def study_seed(cfg: ExperimentConfig, seed: int, fraction: float = 0.05) -> SeedStudy:
    """
    Train once on the source set, then measure source-sampling recall for
    every scoring strategy with B_s = number of target-like frames, and the
    cross-modal AUC for a `fraction` of the target train split and for all of it.

    Raises:
        ArgumentError: if the source set holds no target-like frame
    """
    seeds = stage_seeds(seed)
    source, target = build_datasets(cfg, seed)
    source_train = source.split(SPLIT_TRAIN)
    target_train = target.split(SPLIT_TRAIN)
    target_test = target.split(SPLIT_TEST)
    flagged = source.manifest.target_like_ids
    if not flagged:
        raise ArgumentError("the source set holds no target-like frame; raise data.overlap")

    model = build_model(cfg, seed)
    SegmentationTrainer(model, cfg.train).train_source(source_train, cfg.train.source_iterations, seeds["source"])
    trained_state = model.params.state_dict()

    cache = FeatureCache(model, cfg.discriminator.max_points, seeds["disc"])
    cache.warm(source_train + target_train + target_test)
    trainer = DiscriminatorTrainer(model, cfg.discriminator, cache)
    for slot in sorted({s for strategy in STUDY_STRATEGIES for s in REQUIRED_SLOTS[strategy]}):
        trainer.train(source_train, target_train, slot, seed=seeds["disc"])

    study = SeedStudy(seed=seed)
    budget = Budget.count(len(flagged))
    for strategy in STUDY_STRATEGIES:
        selection = sample_source(source_train, model, budget, strategy, cache, seeds["sample"])
        study.recall[strategy.value] = target_like_recall(selection.frame_ids, flagged)
        logger.info(f"Seed {seed}: {strategy.value} recall {study.recall[strategy.value]:.3f}")

    order = np.random.default_rng(seeds["ufda"]).permutation(len(target_train))
    for p in (fraction, FULL_FRACTION):
        model.params.load_state_dict(trained_state)
        n = Budget.fraction(p).resolve(len(target_train))
        subset = [target_train[i] for i in sorted(order[:n])]
        trainer.train(source_train, subset, DISC_CROSS_MODAL, seed=seeds["disc"])
        study.auc[p] = trainer.evaluate(source_train, target_test, DISC_CROSS_MODAL)["auc"]
        logger.info(f"Seed {seed}: p={p:g} ({n} target frames) AUC {study.auc[p]:.3f}")
    return study
