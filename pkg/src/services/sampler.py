"""
Sampler Service

Scores frames by domainness and keeps the top-B of a domain. One procedure
serves both domains: source frames scoring high resemble the target, target
frames scoring high are the least source-like.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ArgumentError, StateError
from src.core.network import UniDAModel
from src.core.selection import select_top
from src.infrastructure.logger import get_logger, log_exception
from src.models.frame import Domain, Frame
from src.models.params import DISC_CROSS_MODAL, DISC_THREE_D, DISC_TWO_D
from src.models.selection import Budget, ScoringStrategy, SelectionResult
from src.services.discriminator_trainer import FeatureCache, frame_scores

logger = get_logger(__name__)

REQUIRED_SLOTS = {
    ScoringStrategy.CROSS_MODAL: (DISC_CROSS_MODAL,),
    ScoringStrategy.TWO_D_ONLY: (DISC_TWO_D,),
    ScoringStrategy.THREE_D_ONLY: (DISC_THREE_D,),
    ScoringStrategy.AVERAGE_2D_3D: (DISC_TWO_D, DISC_THREE_D),
    ScoringStrategy.RANDOM: (),
}


def random_scores(frames: Sequence[Frame], seed: int) -> List[Tuple[int, float]]:
    """Seeded uniform(0, 1) score per frame, drawn in ascending id order"""
    ids = sorted(f.id for f in frames)
    values = np.random.default_rng(seed).uniform(0.0, 1.0, size=len(ids))
    by_id = dict(zip(ids, values))
    return [(f.id, float(by_id[f.id])) for f in frames]


@log_exception(logger)
def score_frames(
    frames: Sequence[Frame],
    model: UniDAModel,
    strategy: ScoringStrategy,
    cache: Optional[FeatureCache] = None,
    seed: int = 0,
) -> List[Tuple[int, float]]:
    """
    Domainness of every frame under a scoring strategy.

    Args:
        frames: frames to score
        model: network holding the trained discriminators
        strategy: which discriminator(s) to use
        cache: frozen features; built from `model` when omitted
        seed: random-strategy seed

    Returns:
        (frame id, score) in input order

    Raises:
        StateError: if a required discriminator was never trained
    """
    missing = [s for s in REQUIRED_SLOTS[strategy] if s not in model.trained_discriminators]
    if missing:
        raise StateError(f"strategy {strategy.value} needs trained discriminator(s): {', '.join(missing)}")
    if strategy is ScoringStrategy.RANDOM:
        return random_scores(frames, seed)

    cache = cache or FeatureCache(model)
    if strategy is ScoringStrategy.AVERAGE_2D_3D:
        two_d = frame_scores(frames, model, DISC_TWO_D, cache)
        three_d = frame_scores(frames, model, DISC_THREE_D, cache)
        return [(i, (a + b) / 2.0) for (i, a), (_, b) in zip(two_d, three_d)]
    return frame_scores(frames, model, REQUIRED_SLOTS[strategy][0], cache)


def _sample(
    frames: Sequence[Frame],
    model: UniDAModel,
    budget: Budget,
    strategy: ScoringStrategy,
    domain: Domain,
    cache: Optional[FeatureCache],
    seed: int,
) -> SelectionResult:
    if not frames:
        raise ArgumentError(f"no {domain.value} frames to sample from")
    wrong = [f.id for f in frames if f.domain is not domain]
    if wrong:
        raise ArgumentError(f"frames {wrong[:5]} are not {domain.value} frames")
    scored = score_frames(frames, model, strategy, cache, seed)
    result = select_top(scored, budget, strategy)
    logger.info(
        f"Selected {result.budget}/{len(frames)} {domain.value} frames "
        f"with {strategy.value} (top score {result.scores[0]:.4f})"
    )
    return result


def sample_source(
    frames: Sequence[Frame],
    model: UniDAModel,
    budget: Budget,
    strategy: ScoringStrategy = ScoringStrategy.CROSS_MODAL,
    cache: Optional[FeatureCache] = None,
    seed: int = 0,
) -> SelectionResult:
    """The B_s most target-like source frames"""
    return _sample(frames, model, budget, strategy, Domain.SOURCE, cache, seed)


def sample_target(
    frames: Sequence[Frame],
    model: UniDAModel,
    budget: Budget,
    strategy: ScoringStrategy = ScoringStrategy.CROSS_MODAL,
    cache: Optional[FeatureCache] = None,
    seed: int = 0,
) -> SelectionResult:
    """The B_t highest-domainness target frames"""
    return _sample(frames, model, budget, strategy, Domain.TARGET, cache, seed)
