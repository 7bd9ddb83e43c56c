"""
Unit tests for the sampler service

Tests sampling functionality including:
- Strategy requirements on trained discriminators
- Average 2D / 3D scoring
- Seeded random scoring
- Domain checks on the frame list
"""

import numpy as np
import pytest

from src.core.errors import ArgumentError, StateError
from src.models.params import DISC_CROSS_MODAL, DISC_THREE_D, DISC_TWO_D
from src.models.selection import Budget, ScoringStrategy
from src.services.discriminator_trainer import FeatureCache
from src.services.sampler import random_scores, sample_source, sample_target, score_frames


def _constant_discriminator(model, slot: str, logit: float) -> None:
    """Make a discriminator output sigmoid(logit) for every point"""
    fc3 = model.params.discriminator(slot).fc3
    fc3.weight.value[:] = 0.0
    fc3.bias.value[:] = logit
    model.trained_discriminators.add(slot)


class TestScoreFrames:
    """Test suite for score_frames"""

    @pytest.fixture
    def model(self, make_model):
        return make_model(seed=3)

    def test_untrained_discriminator(self, model, tiny_pair):
        with pytest.raises(StateError):
            score_frames(tiny_pair[0].split("train"), model, ScoringStrategy.CROSS_MODAL)

    def test_average_needs_both(self, model, tiny_pair):
        model.trained_discriminators.add(DISC_TWO_D)
        with pytest.raises(StateError):
            score_frames(tiny_pair[0].split("train"), model, ScoringStrategy.AVERAGE_2D_3D)

    def test_zero_discriminator_scores_half(self, model, tiny_pair):
        _constant_discriminator(model, DISC_CROSS_MODAL, 0.0)
        scores = score_frames(list(tiny_pair[0]), model, ScoringStrategy.CROSS_MODAL)
        assert [s for _, s in scores] == pytest.approx([0.5] * 6)

    def test_average_of_branches(self, model, tiny_pair):
        _constant_discriminator(model, DISC_TWO_D, np.log(0.2 / 0.8))
        _constant_discriminator(model, DISC_THREE_D, np.log(0.8 / 0.2))
        frames = list(tiny_pair[1])[:2]
        scores = score_frames(frames, model, ScoringStrategy.AVERAGE_2D_3D, FeatureCache(model))
        assert [i for i, _ in scores] == [f.id for f in frames]
        assert [s for _, s in scores] == pytest.approx([0.5, 0.5])

    def test_random_needs_no_discriminator(self, model, tiny_pair):
        frames = list(tiny_pair[0])
        first = score_frames(frames, model, ScoringStrategy.RANDOM, seed=9)
        again = score_frames(list(reversed(frames)), model, ScoringStrategy.RANDOM, seed=9)
        assert dict(first) == dict(again)
        assert all(0.0 <= s < 1.0 for _, s in first)

    def test_random_depends_on_seed(self, tiny_pair):
        frames = list(tiny_pair[0])
        assert random_scores(frames, 1) != random_scores(frames, 2)


class TestSample:
    """Test suite for sample_source / sample_target"""

    @pytest.fixture
    def model(self, make_model):
        return make_model(seed=4)

    def test_random_source_selection(self, model, tiny_pair):
        frames = list(tiny_pair[0])
        result = sample_source(frames, model, Budget.fraction(0.5), ScoringStrategy.RANDOM, seed=2)
        assert result.budget == 3
        assert set(result.frame_ids) <= {f.id for f in frames}
        assert result == sample_source(frames, model, Budget.fraction(0.5), ScoringStrategy.RANDOM, seed=2)

    def test_target_selection_prefers_high_scores(self, model, tiny_pair):
        frames = tiny_pair[1].split("train")
        result = sample_target(frames, model, Budget.count(2), ScoringStrategy.RANDOM, seed=5)
        scores = dict(random_scores(frames, 5))
        assert min(scores[i] for i in result.frame_ids) >= max(
            s for i, s in scores.items() if i not in result.frame_ids
        )

    def test_wrong_domain(self, model, tiny_pair):
        with pytest.raises(ArgumentError):
            sample_source(tiny_pair[1].split("train"), model, Budget.count(1), ScoringStrategy.RANDOM)

    def test_empty_frames(self, model):
        with pytest.raises(ArgumentError):
            sample_target([], model, Budget.count(1), ScoringStrategy.RANDOM)

    def test_budget_exceeds_domain(self, model, tiny_pair):
        with pytest.raises(ArgumentError):
            sample_target(tiny_pair[1].split("train"), model, Budget.count(5), ScoringStrategy.RANDOM)
