"""
Central finite-difference verification of tape gradients.
"""

from typing import Callable, Sequence

import numpy as np

from config import config
from src.core.autodiff import Tape, Tensor
from src.core.errors import ArgumentError, NumericError
from src.infrastructure.logger import get_logger

logger = get_logger(__name__)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = config.GRAD_CHECK_EPS,
    floor: float = config.GRAD_CHECK_FLOOR,
) -> float:
    """
    Compare analytic gradients with central differences.

    Args:
        loss_fn: deterministic closure evaluating a scalar loss from the
            current values of params
        params: tensors to differentiate with respect to
        eps: finite-difference step
        floor: lower bound of the relative-error denominator

    Returns:
        max over all entries of |analytic − fd| / max(|analytic|, |fd|, floor)

    Raises:
        ArgumentError: if eps is not positive
        NumericError: if the loss is not finite
    """
    if not eps > 0.0:
        raise ArgumentError(f"eps must be positive, got {eps}")

    for p in params:
        p.grad = None
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss, params=params)
    analytic = [p.grad.copy() for p in params]
    for p in params:
        p.grad = None

    def evaluate() -> float:
        value = float(loss_fn().value)
        if not np.isfinite(value):
            raise NumericError("non-finite loss during finite differencing")
        return value

    worst = 0.0
    for p, a_grad in zip(params, analytic):
        p.value = np.ascontiguousarray(p.value)
        flat = p.value.reshape(-1)
        a_flat = a_grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            plus = evaluate()
            flat[i] = original - eps
            minus = evaluate()
            flat[i] = original
            fd = (plus - minus) / (2.0 * eps)
            err = abs(a_flat[i] - fd) / max(abs(a_flat[i]), abs(fd), floor)
            worst = max(worst, err)

    logger.debug(f"grad_check over {len(params)} tensors: max relative error {worst:.3e}")
    return worst
