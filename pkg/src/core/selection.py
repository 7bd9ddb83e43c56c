"""
Budgeted top-score selection.

Frames are sorted by score descending with ascending id as tie-break, then
cut at the resolved budget.
"""

from typing import Iterable, List, Tuple

import numpy as np

from src.core.errors import ArgumentError, NumericError
from src.models.selection import Budget, ScoringStrategy, SelectionResult


def rank_frames(scored: Iterable[Tuple[int, float]]) -> List[Tuple[int, float]]:
    """
    Order (id, score) pairs by score descending, then id ascending.

    Raises:
        NumericError: on a non-finite score
        ArgumentError: on duplicate ids
    """
    pairs = [(int(i), float(s)) for i, s in scored]
    if any(not np.isfinite(s) for _, s in pairs):
        raise NumericError("cannot rank non-finite scores")
    if len({i for i, _ in pairs}) != len(pairs):
        raise ArgumentError("duplicate frame id in scored list")
    return sorted(pairs, key=lambda p: (-p[1], p[0]))


def select_top(
    scored: Iterable[Tuple[int, float]],
    budget: Budget,
    strategy: ScoringStrategy = ScoringStrategy.CROSS_MODAL,
) -> SelectionResult:
    """
    Keep the B best-scoring frames.

    Args:
        scored: (frame id, score) pairs
        budget: count or fraction of len(scored)
        strategy: tag recorded on the result

    Returns:
        SelectionResult with ids ordered best first

    Raises:
        ArgumentError: if the budget exceeds the frame count
    """
    ranked = rank_frames(scored)
    n = budget.resolve(len(ranked))
    top = ranked[:n]
    return SelectionResult(
        frame_ids=[i for i, _ in top],
        scores=[s for _, s in top],
        budget=n,
        strategy=strategy,
    )
