"""
Cross-modality feature interaction.

For modality a receiving from modality b:
    q^i = W^q f^i,  k^i = W^k f^i,  v^i = W^v f^i       (per modality)
    A_{b→a} = K_a · V_bᵀ                                  (N×N)
    R_{b→a} = softmax_rows(A / √F) · V_a
    f̂_a    = FFN(Norm(f_a ⊙ R_{b→a}))

The symmetric variant computes both directions; the unidirectional variants
enhance one modality and pass the other through.
"""

import math
from enum import Enum
from typing import Tuple

from config import config
from src.core.autodiff import (
    Tensor, add, affine, layer_norm_rows, matmul, mul, relu, softmax_rows, transpose,
)
from src.core.errors import ArgumentError, ShapeError
from src.models.params import InteractionParams, ModalityInteraction


class InteractionVariant(Enum):
    """Which directions of the interaction are active"""
    SYMMETRIC = "symmetric"
    TWO_D_TO_THREE_D = "two_d_to_three_d"
    THREE_D_TO_TWO_D = "three_d_to_two_d"
    NONE = "none"

    @classmethod
    def from_string(cls, value: str) -> "InteractionVariant":
        for variant in cls:
            if variant.value == value.lower():
                return variant
        raise ArgumentError(f"unknown interaction variant {value!r}")


class FusionMode(Enum):
    """How the relation R is combined with the features before Norm"""
    MULTIPLY = "multiply"
    ADD = "add"

    @classmethod
    def from_string(cls, value: str) -> "FusionMode":
        for mode in cls:
            if mode.value == value.lower():
                return mode
        raise ArgumentError(f"unknown fusion mode {value!r}")


class AttentionMode(Enum):
    """Score matrix form: literal K_a·V_bᵀ, or conventional Q_a·K_bᵀ"""
    LITERAL = "literal"
    CONVENTIONAL = "conventional"

    @classmethod
    def from_string(cls, value: str) -> "AttentionMode":
        for mode in cls:
            if mode.value == value.lower():
                return mode
        raise ArgumentError(f"unknown attention mode {value!r}")


def _check_same(*mats: Tensor) -> None:
    shape = mats[0].shape
    for m in mats:
        if m.ndim != 2 or m.shape != shape:
            raise ShapeError(f"interaction operands must share N×F shape, got {[x.shape for x in mats]}")


def qkv(f: Tensor, weights: ModalityInteraction) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Row-wise projections Q = f·W^qᵀ, K = f·W^kᵀ, V = f·W^vᵀ.

    Raises:
        ShapeError: if the weights are not F×F
    """
    if f.ndim != 2:
        raise ShapeError(f"features must be N×F, got {f.shape}")
    width = f.shape[1]
    for w in (weights.wq, weights.wk, weights.wv):
        if w.shape != (width, width):
            raise ShapeError(f"projection must be {width}×{width}, got {w.shape}")
    return (
        matmul(f, transpose(weights.wq)),
        matmul(f, transpose(weights.wk)),
        matmul(f, transpose(weights.wv)),
    )


def cross_relation(k_a: Tensor, v_b: Tensor, v_a: Tensor) -> Tensor:
    """
    R_{b→a} = softmax_rows(K_a·V_bᵀ, √F) · V_a.

    Each output row is a convex combination of the rows of V_a.
    """
    _check_same(k_a, v_b, v_a)
    scores = matmul(k_a, transpose(v_b))
    return matmul(softmax_rows(scores, math.sqrt(k_a.shape[1])), v_a)


def conventional_relation(q_a: Tensor, k_b: Tensor, v_b: Tensor) -> Tensor:
    """R = softmax_rows(Q_a·K_bᵀ, √F) · V_b"""
    _check_same(q_a, k_b, v_b)
    scores = matmul(q_a, transpose(k_b))
    return matmul(softmax_rows(scores, math.sqrt(q_a.shape[1])), v_b)


def fuse(
    f: Tensor,
    relation: Tensor,
    weights: ModalityInteraction,
    fusion_mode: FusionMode = FusionMode.MULTIPLY,
    eps: float = config.NORM_EPS,
) -> Tensor:
    """
    f̂ = FFN(Norm(f ⊙ R)) or FFN(Norm(f + R)).

    FFN is affine(F→2F), ReLU, affine(2F→F) applied per point.

    Raises:
        ShapeError: if f and R differ in shape
        ArgumentError: for an unknown fusion mode
    """
    _check_same(f, relation)
    if fusion_mode is FusionMode.MULTIPLY:
        combined = mul(f, relation)
    elif fusion_mode is FusionMode.ADD:
        combined = add(f, relation)
    else:
        raise ArgumentError(f"unknown fusion mode {fusion_mode!r}")
    normed = layer_norm_rows(combined, weights.norm_gamma, weights.norm_beta, eps)
    hidden = relu(affine(normed, weights.ffn1.weight, weights.ffn1.bias))
    return affine(hidden, weights.ffn2.weight, weights.ffn2.bias)


def interact(
    f2d: Tensor,
    f3d: Tensor,
    params: InteractionParams,
    variant: InteractionVariant = InteractionVariant.SYMMETRIC,
    fusion_mode: FusionMode = FusionMode.MULTIPLY,
    attention: AttentionMode = AttentionMode.LITERAL,
) -> Tuple[Tensor, Tensor]:
    """
    Enhanced feature pair (f̂2d, f̂3d) for the selected variant.

    two_d_to_three_d enhances the 3D features with 2D information and passes
    f2d through; three_d_to_two_d is the mirror case; none passes both.
    """
    _check_same(f2d, f3d)
    if variant is InteractionVariant.NONE:
        return f2d, f3d

    q2, k2, v2 = qkv(f2d, params.two_d)
    q3, k3, v3 = qkv(f3d, params.three_d)

    def relation_into_2d() -> Tensor:
        if attention is AttentionMode.CONVENTIONAL:
            return conventional_relation(q2, k3, v3)
        return cross_relation(k2, v3, v2)

    def relation_into_3d() -> Tensor:
        if attention is AttentionMode.CONVENTIONAL:
            return conventional_relation(q3, k2, v2)
        return cross_relation(k3, v2, v3)

    out2d, out3d = f2d, f3d
    if variant in (InteractionVariant.SYMMETRIC, InteractionVariant.THREE_D_TO_TWO_D):
        out2d = fuse(f2d, relation_into_2d(), params.two_d, fusion_mode)
    if variant in (InteractionVariant.SYMMETRIC, InteractionVariant.TWO_D_TO_THREE_D):
        out3d = fuse(f3d, relation_into_3d(), params.three_d, fusion_mode)
    return out2d, out3d
