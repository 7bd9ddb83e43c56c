"""
Unit tests for Adam and the poly learning-rate schedule
"""

import numpy as np
import pytest

from src.core.autodiff import Tensor
from src.core.errors import ArgumentError, StateError
from src.core.optim import Adam, OptimizerState, adam_step, poly_lr


class TestPolyLR:
    """Test suite for poly_lr"""

    def test_start_and_end(self):
        assert poly_lr(0, 100, 1e-3) == pytest.approx(1e-3)
        assert poly_lr(100, 100, 1e-3) == 0.0

    def test_half_way(self):
        assert poly_lr(50, 100, 1e-3, 0.9) == pytest.approx(5.359e-4, rel=1e-3)

    def test_non_increasing(self):
        values = [poly_lr(i, 20, 1e-3, 0.9) for i in range(21)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_iteration_past_end(self):
        with pytest.raises(ArgumentError):
            poly_lr(101, 100, 1e-3)

    def test_non_positive_max_iter(self):
        with pytest.raises(ArgumentError):
            poly_lr(0, 0, 1e-3)


class TestAdamStep:
    """Test suite for adam_step"""

    @pytest.fixture
    def param(self):
        return Tensor(np.array([1.0, -2.0]), requires_grad=True, name="w")

    def test_zero_gradient_is_identity(self, param):
        param.grad = np.zeros(2)
        adam_step([param], OptimizerState(), lr=0.1)
        np.testing.assert_array_equal(param.value, [1.0, -2.0])

    def test_first_step_moves_by_lr_against_sign(self, param):
        param.grad = np.array([0.3, -5.0])
        adam_step([param], OptimizerState(), lr=0.01)
        assert param.value == pytest.approx([0.99, -1.99], abs=1e-8)

    def test_second_identical_step_similar_magnitude(self, param):
        state = OptimizerState()
        param.grad = np.array([0.5, 0.5])
        adam_step([param], state, lr=0.01)
        first = 1.0 - param.value[0]
        before = param.value[0]
        param.grad = np.array([0.5, 0.5])
        adam_step([param], state, lr=0.01)
        second = before - param.value[0]
        assert second == pytest.approx(first, rel=0.01)

    def test_gradients_cleared(self, param):
        param.grad = np.ones(2)
        adam_step([param], OptimizerState(), lr=0.01)
        assert param.grad is None

    def test_missing_gradient(self, param):
        with pytest.raises(StateError):
            adam_step([param], OptimizerState(), lr=0.01)

    def test_state_keyed_by_name(self, param):
        state = OptimizerState()
        param.grad = np.ones(2)
        adam_step([param], state, lr=0.01)
        assert set(state.m) == {"w"}
        assert state.t == 1


class TestAdam:
    """Test suite for the stateful Adam wrapper"""

    def test_step_returns_scheduled_lr(self):
        p = Tensor(np.zeros(1), requires_grad=True)
        opt = Adam([p], base_lr=1e-3, max_iter=10)
        p.grad = np.ones(1)
        assert opt.step(0) == pytest.approx(1e-3)
        p.grad = np.ones(1)
        assert opt.step(5) == pytest.approx(1e-3 * 0.5 ** 0.9)

    def test_minimises_quadratic(self):
        p = Tensor(np.array([3.0]), requires_grad=True)
        opt = Adam([p], base_lr=0.1, max_iter=500)
        for it in range(500):
            p.grad = p.value.copy()
            opt.step(it)
        assert abs(p.value[0]) < 0.05
