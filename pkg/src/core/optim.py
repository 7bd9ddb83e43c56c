"""
Adam optimizer and poly learning-rate schedule.

Algorithm reference:
- m_t = β1·m + (1 − β1)·g
- v_t = β2·v + (1 − β2)·g²
- p  -= lr · m̂ / (√v̂ + ε), with m̂ = m_t / (1 − β1^t), v̂ = v_t / (1 − β2^t)
- lr(iter) = base_lr · (1 − iter / max_iter)^power
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from config import config
from src.core.autodiff import Tensor
from src.core.errors import ArgumentError, StateError


@dataclass
class OptimizerState:
    """
    Adam moment estimates keyed by parameter name.

    Attributes:
        m: first moments
        v: second moments (non-negative)
        t: number of steps taken
        beta1, beta2, eps: Adam constants
        base_lr: learning rate at iteration 0
    """
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = config.ADAM_BETA1
    beta2: float = config.ADAM_BETA2
    eps: float = config.ADAM_EPS
    base_lr: float = config.BASE_LR


def _key(p: Tensor, position: int) -> str:
    return p.name if p.name is not None else f"#{position}"


def adam_step(params: Sequence[Tensor], state: OptimizerState, lr: float) -> OptimizerState:
    """
    Apply one bias-corrected Adam update in place and clear gradients.

    Args:
        params: trainable tensors, each with a populated .grad
        state: moment estimates, updated in place
        lr: learning rate for this step

    Returns:
        The same state object, for chaining

    Raises:
        StateError: if any parameter has no gradient
    """
    missing = [_key(p, i) for i, p in enumerate(params) if p.grad is None]
    if missing:
        raise StateError(f"missing gradient for {', '.join(missing)}")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t

    for i, p in enumerate(params):
        key = _key(p, i)
        g = p.grad
        m = state.m.get(key)
        v = state.v.get(key)
        if m is None or m.shape != p.value.shape:
            m = np.zeros_like(p.value)
            v = np.zeros_like(p.value)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[key] = m
        state.v[key] = v
        p.value = p.value - lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        p.grad = None

    return state


def poly_lr(iteration: int, max_iter: int, base_lr: float, power: float = config.POLY_POWER) -> float:
    """
    Poly learning-rate policy.

    Raises:
        ArgumentError: if max_iter <= 0 or iteration outside [0, max_iter]
    """
    if max_iter <= 0:
        raise ArgumentError(f"max_iter must be positive, got {max_iter}")
    if iteration < 0 or iteration > max_iter:
        raise ArgumentError(f"iteration {iteration} outside [0, {max_iter}]")
    return base_lr * (1.0 - iteration / max_iter) ** power


class Adam:
    """
    Stateful wrapper pairing a parameter list with its OptimizerState and a
    poly schedule.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        base_lr: float = config.BASE_LR,
        max_iter: int = config.MAX_ITERATIONS,
        power: float = config.POLY_POWER,
        beta1: float = config.ADAM_BETA1,
        beta2: float = config.ADAM_BETA2,
        state: Optional[OptimizerState] = None,
    ):
        self.params = list(params)
        self.max_iter = max_iter
        self.power = power
        self.state = state or OptimizerState(beta1=beta1, beta2=beta2, base_lr=base_lr)

    def current_lr(self, iteration: int) -> float:
        return poly_lr(min(iteration, self.max_iter), self.max_iter, self.state.base_lr, self.power)

    def step(self, iteration: int) -> float:
        """Update parameters for the given iteration; returns the lr used"""
        lr = self.current_lr(iteration)
        adam_step(self.params, self.state, lr)
        return lr

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
