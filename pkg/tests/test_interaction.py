"""
Unit tests for the cross-modality interaction module
"""

import math

import numpy as np
import pytest

from src.core.autodiff import Tensor, mean_all, softmax_rows
from src.core.errors import ArgumentError, ShapeError
from src.core.gradcheck import grad_check
from src.core.interaction import (
    AttentionMode, FusionMode, InteractionVariant, cross_relation, fuse, interact, qkv,
)
from src.models.params import InteractionParams, ModalityInteraction, named_tensors


def make_params(f: int, seed: int = 0) -> InteractionParams:
    rng = np.random.default_rng(seed)
    return InteractionParams(two_d=ModalityInteraction.init(rng, f), three_d=ModalityInteraction.init(rng, f))


def reference_direction(f_a, f_b, w_a, w_b, eps=1e-5):
    """Plain numpy version of one interaction direction b → a"""
    k_a = f_a @ w_a.wk.value.T
    v_a = f_a @ w_a.wv.value.T
    v_b = f_b @ w_b.wv.value.T
    scores = k_a @ v_b.T / math.sqrt(f_a.shape[1])
    attn = np.exp(scores - scores.max(axis=1, keepdims=True))
    attn /= attn.sum(axis=1, keepdims=True)
    combined = f_a * (attn @ v_a)
    mu = combined.mean(axis=1, keepdims=True)
    var = combined.var(axis=1, keepdims=True)
    normed = (combined - mu) / np.sqrt(var + eps) * w_a.norm_gamma.value + w_a.norm_beta.value
    hidden = np.maximum(normed @ w_a.ffn1.weight.value + w_a.ffn1.bias.value, 0.0)
    return hidden @ w_a.ffn2.weight.value + w_a.ffn2.bias.value


class TestQKV:
    """Test suite for qkv"""

    def test_identity_projections(self):
        weights = ModalityInteraction.init(np.random.default_rng(0), 3)
        for w in (weights.wq, weights.wk, weights.wv):
            w.value = np.eye(3)
        f = Tensor(np.arange(6.0).reshape(2, 3))
        for out in qkv(f, weights):
            np.testing.assert_array_equal(out.value, f.value)

    def test_scalar_case(self):
        weights = ModalityInteraction.init(np.random.default_rng(0), 1)
        weights.wq.value = np.array([[2.5]])
        q, _, _ = qkv(Tensor([[4.0]]), weights)
        assert q.value[0, 0] == pytest.approx(10.0)

    def test_shape_mismatch(self):
        weights = ModalityInteraction.init(np.random.default_rng(0), 3)
        with pytest.raises(ShapeError):
            qkv(Tensor(np.ones((2, 4))), weights)


class TestCrossRelation:
    """Test suite for cross_relation"""

    def test_single_point(self):
        out = cross_relation(Tensor([[0.3, 1.0]]), Tensor([[2.0, -1.0]]), Tensor([[5.0, 6.0]]))
        np.testing.assert_allclose(out.value, [[5.0, 6.0]])

    def test_hand_example(self):
        out = cross_relation(Tensor([[0.0], [0.0]]), Tensor([[1.0], [1.0]]), Tensor([[2.0], [4.0]]))
        np.testing.assert_allclose(out.value, [[3.0], [3.0]])

    def test_rows_are_convex_combinations(self):
        rng = np.random.default_rng(4)
        k, vb, va = (Tensor(rng.normal(size=(6, 3)) * 3) for _ in range(3))
        out = cross_relation(k, vb, va).value
        assert np.all(out >= va.value.min(axis=0) - 1e-12)
        assert np.all(out <= va.value.max(axis=0) + 1e-12)

    def test_attention_rows_sum_to_one(self):
        rng = np.random.default_rng(5)
        k, vb = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
        rows = softmax_rows(k @ vb.T, math.sqrt(4)).value.sum(axis=1)
        assert np.max(np.abs(rows - 1.0)) < 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            cross_relation(Tensor(np.ones((2, 2))), Tensor(np.ones((3, 2))), Tensor(np.ones((2, 2))))


class TestFuse:
    """Test suite for fuse"""

    @pytest.fixture
    def weights(self):
        return ModalityInteraction.init(np.random.default_rng(1), 3)

    def test_multiply_by_ones_equals_add_zero(self, weights):
        f = Tensor(np.random.default_rng(2).normal(size=(4, 3)))
        a = fuse(f, Tensor(np.ones((4, 3))), weights, FusionMode.MULTIPLY).value
        b = fuse(f, Tensor(np.zeros((4, 3))), weights, FusionMode.ADD).value
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
        assert a.shape == (4, 3)

    def test_unknown_mode(self, weights):
        f = Tensor(np.ones((2, 3)))
        with pytest.raises(ArgumentError):
            fuse(f, f, weights, "concat")

    def test_mode_from_string(self):
        assert FusionMode.from_string("ADD") is FusionMode.ADD
        with pytest.raises(ArgumentError):
            FusionMode.from_string("concat")


class TestInteract:
    """Test suite for interact"""

    @pytest.fixture
    def features(self):
        rng = np.random.default_rng(7)
        return Tensor(rng.normal(size=(3, 2))), Tensor(rng.normal(size=(3, 2)))

    def test_none_passes_through(self, features):
        f2d, f3d = features
        out2d, out3d = interact(f2d, f3d, make_params(2), InteractionVariant.NONE)
        assert out2d is f2d and out3d is f3d

    def test_unidirectional_pass_through(self, features):
        f2d, f3d = features
        params = make_params(2)
        out2d, out3d = interact(f2d, f3d, params, InteractionVariant.TWO_D_TO_THREE_D)
        np.testing.assert_array_equal(out2d.value, f2d.value)
        out2d, out3d = interact(f2d, f3d, params, InteractionVariant.THREE_D_TO_TWO_D)
        np.testing.assert_array_equal(out3d.value, f3d.value)

    def test_symmetric_matches_reference(self, features):
        f2d, f3d = features
        params = make_params(2, seed=7)
        out2d, out3d = interact(f2d, f3d, params)
        np.testing.assert_allclose(
            out2d.value, reference_direction(f2d.value, f3d.value, params.two_d, params.three_d),
            rtol=0, atol=1e-12,
        )
        np.testing.assert_allclose(
            out3d.value, reference_direction(f3d.value, f2d.value, params.three_d, params.two_d),
            rtol=0, atol=1e-12,
        )

    @pytest.mark.parametrize("attention", list(AttentionMode))
    def test_swapping_roles_swaps_outputs(self, features, attention):
        f2d, f3d = features
        params = make_params(2, seed=3)
        out2d, out3d = interact(f2d, f3d, params, attention=attention)
        swapped2d, swapped3d = interact(f3d, f2d, params.swapped(), attention=attention)
        np.testing.assert_allclose(swapped2d.value, out3d.value, rtol=0, atol=1e-12)
        np.testing.assert_allclose(swapped3d.value, out2d.value, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("variant", list(InteractionVariant))
    def test_shapes_preserved(self, features, variant):
        f2d, f3d = features
        out2d, out3d = interact(f2d, f3d, make_params(2), variant)
        assert out2d.shape == (3, 2) and out3d.shape == (3, 2)

    def test_gradients(self):
        rng = np.random.default_rng(11)
        params = make_params(4, seed=11)
        f2d = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
        f3d = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
        tensors = [f2d, f3d] + [t for _, t in named_tensors(params)]
        for t in tensors:
            t.requires_grad = True

        def loss_fn():
            a, b = interact(f2d, f3d, params)
            return mean_all(a * b)

        assert grad_check(loss_fn, tensors) < 1e-4

    def test_mismatched_features(self):
        with pytest.raises(ShapeError):
            interact(Tensor(np.ones((3, 2))), Tensor(np.ones((4, 2))), make_params(2))
