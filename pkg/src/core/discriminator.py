"""
Pointwise domain discriminator.

Three 1×1 layers (in → H → H → 1, ReLU between) followed by a sigmoid give
each point the probability of belonging to the target domain. A frame's
domainness is the mean over its points.
"""

from typing import Tuple

import numpy as np

from config import config
from src.core.autodiff import (
    Tensor, affine, binary_cross_entropy, concat_cols, mean_all, relu, sigmoid,
)
from src.core.errors import ArgumentError, ShapeError
from src.models.params import DiscriminatorParams


def discriminator_logits(features: Tensor, params: DiscriminatorParams) -> Tensor:
    """
    Per-point logits N×1.

    Raises:
        ShapeError: if the feature width differs from the first layer
    """
    if features.ndim != 2 or features.shape[1] != params.input_width:
        raise ShapeError(
            f"discriminator expects width {params.input_width}, features are {features.shape}"
        )
    hidden = relu(affine(features, params.fc1.weight, params.fc1.bias))
    hidden = relu(affine(hidden, params.fc2.weight, params.fc2.bias))
    return affine(hidden, params.fc3.weight, params.fc3.bias)


def point_probabilities(features: Tensor, params: DiscriminatorParams) -> Tensor:
    """Per-point target probabilities N×1"""
    return sigmoid(discriminator_logits(features, params))


def discriminate(f2d: Tensor, f3d: Tensor, params: DiscriminatorParams) -> Tuple[Tensor, Tensor]:
    """
    Score the 2F concatenation [f̂2d, f̂3d].

    Args:
        f2d: interacted image features N×F
        f3d: interacted point features N×F
        params: cross-modal discriminator (input width 2F)

    Returns:
        (per-point probabilities N×1, frame score as a scalar tensor)

    Raises:
        ShapeError: if the feature matrices are not aligned
    """
    if f2d.shape != f3d.shape or f2d.ndim != 2:
        raise ShapeError(f"feature pair shapes differ: {f2d.shape} vs {f3d.shape}")
    probs = point_probabilities(concat_cols(f2d, f3d), params)
    return probs, mean_all(probs)


def discriminate_single(features: Tensor, params: DiscriminatorParams) -> Tuple[Tensor, Tensor]:
    """Single-modality variant: scores one N×F feature matrix"""
    probs = point_probabilities(features, params)
    return probs, mean_all(probs)


def bce_domain_loss(probs: Tensor, label: int, clamp: float = config.BCE_CLAMP) -> Tensor:
    """
    Mean binary cross entropy of per-point probabilities against a domain label.

    Raises:
        ArgumentError: if label is not 0 or 1
        NumericError: on non-finite probabilities
    """
    if label not in (config.SOURCE_DOMAIN_LABEL, config.TARGET_DOMAIN_LABEL):
        raise ArgumentError(f"domain label must be 0 or 1, got {label}")
    return binary_cross_entropy(probs, label, clamp)


def frame_score(probs: np.ndarray) -> float:
    """Mean of per-point probabilities as a plain float"""
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    if probs.size == 0:
        raise ShapeError("cannot score a frame without points")
    return float(probs.mean())
