"""
Unit tests for the domain discriminator and its training loop
"""

import numpy as np
import pytest

from src.core.autodiff import Tensor
from src.core.discriminator import bce_domain_loss, discriminate, discriminate_single, frame_score
from src.core.errors import ArgumentError, ShapeError
from src.core.synthetic import generate_domain_pair
from src.models.dataset import SPLIT_TEST, SPLIT_TRAIN
from src.models.domain_spec import target_max_shift
from src.models.params import DISC_CROSS_MODAL, DISC_TWO_D, DiscriminatorParams
from src.models.task import DiscriminatorConfig
from src.services.discriminator_trainer import DiscriminatorTrainer, FeatureCache, train_discriminator
from tests.conftest import TINY


@pytest.fixture
def disc():
    return DiscriminatorParams.init(np.random.default_rng(0), 4, 8)


class TestDiscriminate:
    """Test suite for discriminate and the domain loss"""

    def test_zero_weights_give_half(self, disc):
        for layer in (disc.fc1, disc.fc2, disc.fc3):
            layer.weight.value[:] = 0.0
            layer.bias.value[:] = 0.0
        probs, score = discriminate(Tensor(np.ones((3, 2))), Tensor(np.ones((3, 2))), disc)
        np.testing.assert_allclose(probs.value, 0.5)
        assert float(score.value) == pytest.approx(0.5)

    def test_single_point_score(self, disc):
        probs, score = discriminate(Tensor([[0.1, 0.2]]), Tensor([[0.3, 0.4]]), disc)
        assert float(score.value) == pytest.approx(float(probs.value[0, 0]))

    def test_raising_final_bias_raises_score(self, disc):
        f = Tensor(np.random.default_rng(1).normal(size=(5, 2)))
        _, before = discriminate(f, f, disc)
        disc.fc3.bias.value = disc.fc3.bias.value + 0.5
        _, after = discriminate(f, f, disc)
        assert float(after.value) > float(before.value)

    def test_score_in_open_interval(self, disc):
        f = Tensor(np.random.default_rng(2).normal(size=(20, 2)) * 10)
        probs, score = discriminate(f, f, disc)
        assert 0.0 < float(score.value) < 1.0
        assert frame_score(probs.value) == pytest.approx(float(score.value))

    def test_width_mismatch(self, disc):
        with pytest.raises(ShapeError):
            discriminate_single(Tensor(np.ones((2, 3))), disc)

    def test_misaligned_pair(self, disc):
        with pytest.raises(ShapeError):
            discriminate(Tensor(np.ones((2, 2))), Tensor(np.ones((3, 2))), disc)

    def test_bce_at_half(self):
        for label in (0, 1):
            assert float(bce_domain_loss(Tensor([[0.5], [0.5]]), label).value) == pytest.approx(np.log(2.0))

    def test_bce_hand_example(self):
        loss = bce_domain_loss(Tensor([[0.25], [0.75]]), 1)
        assert float(loss.value) == pytest.approx(0.8370, abs=1e-4)

    def test_bce_clamped_at_label(self):
        assert float(bce_domain_loss(Tensor([[1.0]]), 1).value) < 1e-6

    def test_bce_rejects_other_labels(self):
        with pytest.raises(ArgumentError):
            bce_domain_loss(Tensor([[0.5]]), 2)


class TestDiscriminatorTrainer:
    """Test suite for DiscriminatorTrainer"""

    @pytest.fixture
    def disc_config(self):
        return DiscriminatorConfig(hidden=8, iterations=6, batch_size=2, max_points=16)

    def test_same_seed_same_weights(self, tiny_pair, make_model, disc_config):
        source, target = tiny_pair
        weights = []
        for _ in range(2):
            model = make_model()
            train_discriminator(list(source), target.split(SPLIT_TRAIN), model, disc_config, seed=3)
            weights.append(model.params.discriminator(DISC_CROSS_MODAL).fc1.weight.value.copy())
        np.testing.assert_array_equal(weights[0], weights[1])

    def test_marks_slot_trained(self, tiny_pair, make_model, disc_config):
        source, target = tiny_pair
        model = make_model()
        history = DiscriminatorTrainer(model, disc_config).train(list(source), target.split(SPLIT_TRAIN), DISC_TWO_D)
        assert model.trained_discriminators == {DISC_TWO_D}
        assert len(history.losses) == 6
        assert all(0.0 <= a <= 1.0 for a in history.metrics["accuracy"])

    def test_empty_domain(self, tiny_pair, make_model, disc_config):
        source, _ = tiny_pair
        with pytest.raises(ArgumentError):
            DiscriminatorTrainer(make_model(), disc_config).train(list(source), [])

    def test_unknown_slot(self, tiny_pair, make_model, disc_config):
        source, target = tiny_pair
        with pytest.raises(ArgumentError):
            DiscriminatorTrainer(make_model(), disc_config).train(list(source), list(target), "four_d")

    def test_cache_is_order_independent(self, tiny_pair, make_model):
        source, _ = tiny_pair
        frames = list(source)
        model = make_model()
        forward = FeatureCache(model, max_points=16, seed=5)
        backward = FeatureCache(model, max_points=16, seed=5)
        forward.warm(frames)
        backward.warm(frames[::-1])
        for frame in frames:
            np.testing.assert_array_equal(
                forward.features(frame)[DISC_CROSS_MODAL], backward.features(frame)[DISC_CROSS_MODAL]
            )

    @pytest.mark.slow
    def test_separable_domains(self, tiny_specs, make_model):
        source_spec = tiny_specs[0]
        target_spec = target_max_shift().shifted(**TINY)
        source, target = generate_domain_pair(source_spec, target_spec, (12, 12, 12), 0.0, seed=1)
        source_frames = list(source)
        config = DiscriminatorConfig(hidden=8, iterations=500, batch_size=4, lr=0.01, max_points=32)
        model = make_model()
        trainer = DiscriminatorTrainer(model, config, seed=2)
        history = trainer.train(source_frames[:8], target.split(SPLIT_TRAIN)[:8], DISC_TWO_D, seed=2)

        held_out = trainer.evaluate(source_frames[8:], target.split(SPLIT_TEST), DISC_TWO_D)
        assert held_out["accuracy"] >= 0.95
        early = np.mean(history.losses[:50])
        late = np.mean(history.losses[-50:])
        assert late < early

    @pytest.mark.slow
    def test_identical_domains_near_chance(self, tiny_specs, make_model):
        spec = tiny_specs[0]
        source, target = generate_domain_pair(spec, spec, (158, 8, 150), 0.0, seed=3)
        source_frames = list(source)
        config = DiscriminatorConfig(hidden=8, iterations=500, batch_size=4, lr=0.01, max_points=32)
        trainer = DiscriminatorTrainer(make_model(), config, seed=2)
        trainer.train(source_frames[:8], target.split(SPLIT_TRAIN), DISC_TWO_D, seed=2)

        held_out = trainer.evaluate(source_frames[8:], target.split(SPLIT_TEST), DISC_TWO_D)
        assert 0.4 <= held_out["accuracy"] <= 0.6
