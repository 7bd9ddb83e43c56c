"""
Learnable parameters of the UniDA3D model.

Parameters are grouped in small dataclasses; ModelParams walks them to
produce dotted names (``encoder2d.conv1.weight``) which serve as optimizer
keys and checkpoint record names.
"""

from dataclasses import dataclass, field, fields, is_dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from config import config
from src.core.autodiff import Tensor
from src.core.errors import FormatError, ShapeError

# Discriminator slots: the cross-modal scorer plus the single-modality
# baselines trained on raw encoder features
DISC_CROSS_MODAL = "cross_modal"
DISC_TWO_D = "two_d"
DISC_THREE_D = "three_d"


def _normal(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...], gain: float = 2.0) -> Tensor:
    return Tensor(rng.normal(0.0, np.sqrt(gain / fan_in), size=shape), requires_grad=True)


@dataclass
class Linear:
    """Affine map x·W + b with W stored as in×out"""
    weight: Tensor
    bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, n_in: int, n_out: int, gain: float = 2.0) -> "Linear":
        return cls(
            weight=_normal(rng, n_in, (n_in, n_out), gain),
            bias=Tensor(np.zeros(n_out), requires_grad=True),
        )

    @property
    def n_in(self) -> int:
        return self.weight.shape[0]

    @property
    def n_out(self) -> int:
        return self.weight.shape[1]


@dataclass
class Encoder2DParams:
    """Two 3×3 convolutions, weights in im2col layout (9·C_in × C_out)"""
    conv1: Linear
    conv2: Linear


@dataclass
class Encoder3DParams:
    """Per-point MLP (4 → 16 → F) plus context projection (2F → F)"""
    fc1: Linear
    fc2: Linear
    fc3: Linear


@dataclass
class ModalityInteraction:
    """
    Interaction weights owned by one modality.

    Attributes:
        wq, wk, wv: F×F projections, q^i = W^q f^i
        norm_gamma, norm_beta: per-feature affine of the Norm step
        ffn1, ffn2: F → 2F → F feed-forward
    """
    wq: Tensor
    wk: Tensor
    wv: Tensor
    norm_gamma: Tensor
    norm_beta: Tensor
    ffn1: Linear
    ffn2: Linear

    @classmethod
    def init(cls, rng: np.random.Generator, f: int) -> "ModalityInteraction":
        return cls(
            wq=_normal(rng, f, (f, f), gain=1.0),
            wk=_normal(rng, f, (f, f), gain=1.0),
            wv=_normal(rng, f, (f, f), gain=1.0),
            norm_gamma=Tensor(np.ones(f), requires_grad=True),
            norm_beta=Tensor(np.zeros(f), requires_grad=True),
            ffn1=Linear.init(rng, f, 2 * f),
            ffn2=Linear.init(rng, 2 * f, f),
        )


@dataclass
class InteractionParams:
    """Per-modality interaction weights"""
    two_d: ModalityInteraction
    three_d: ModalityInteraction

    def swapped(self) -> "InteractionParams":
        """Same weights with modality roles exchanged"""
        return InteractionParams(two_d=self.three_d, three_d=self.two_d)


@dataclass
class DiscriminatorParams:
    """Three pointwise affine layers in → H → H → 1 with ReLU between"""
    fc1: Linear
    fc2: Linear
    fc3: Linear

    @classmethod
    def init(cls, rng: np.random.Generator, n_in: int, hidden: int) -> "DiscriminatorParams":
        return cls(
            fc1=Linear.init(rng, n_in, hidden),
            fc2=Linear.init(rng, hidden, hidden),
            fc3=Linear.init(rng, hidden, 1, gain=1.0),
        )

    @property
    def input_width(self) -> int:
        return self.fc1.n_in


def _walk(obj: object, prefix: str) -> Iterator[Tuple[str, Tensor]]:
    if isinstance(obj, Tensor):
        yield prefix, obj
    elif is_dataclass(obj):
        for f in fields(obj):
            name = f"{prefix}.{f.name}" if prefix else f.name
            yield from _walk(getattr(obj, f.name), name)
    elif isinstance(obj, dict):
        for key in sorted(obj):
            yield from _walk(obj[key], f"{prefix}.{key}" if prefix else key)


def named_tensors(obj: object, prefix: str = "") -> List[Tuple[str, Tensor]]:
    """Dotted-name walk over any parameter dataclass"""
    return list(_walk(obj, prefix))


@dataclass
class ModelParams:
    """
    All learnable parameters: encoders, segmentation heads, interaction
    module and the domain discriminators.
    """
    encoder2d: Encoder2DParams
    encoder3d: Encoder3DParams
    head2d: Linear
    head3d: Linear
    interaction: InteractionParams
    discriminators: Dict[str, DiscriminatorParams] = field(default_factory=dict)

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        feature_dim: int = config.FEATURE_DIM,
        num_classes: int = config.NUM_CLASSES,
        disc_hidden: int = config.DISC_HIDDEN,
        conv1_channels: int = config.CONV1_CHANNELS,
        mlp_hidden: int = config.MLP_HIDDEN,
    ) -> "ModelParams":
        """Seeded random initialisation of every parameter"""
        f = feature_dim
        params = cls(
            encoder2d=Encoder2DParams(
                conv1=Linear.init(rng, 9 * 3, conv1_channels),
                conv2=Linear.init(rng, 9 * conv1_channels, f),
            ),
            encoder3d=Encoder3DParams(
                fc1=Linear.init(rng, 4, mlp_hidden),
                fc2=Linear.init(rng, mlp_hidden, f),
                fc3=Linear.init(rng, 2 * f, f),
            ),
            head2d=Linear.init(rng, f, num_classes, gain=1.0),
            head3d=Linear.init(rng, f, num_classes, gain=1.0),
            interaction=InteractionParams(
                two_d=ModalityInteraction.init(rng, f),
                three_d=ModalityInteraction.init(rng, f),
            ),
            discriminators={
                DISC_CROSS_MODAL: DiscriminatorParams.init(rng, 2 * f, disc_hidden),
                DISC_TWO_D: DiscriminatorParams.init(rng, f, disc_hidden),
                DISC_THREE_D: DiscriminatorParams.init(rng, f, disc_hidden),
            },
        )
        params.assign_names()
        return params

    @property
    def feature_dim(self) -> int:
        return self.head2d.n_in

    @property
    def num_classes(self) -> int:
        return self.head2d.n_out

    def assign_names(self) -> None:
        for name, tensor in named_tensors(self):
            tensor.name = name

    def named_tensors(self) -> List[Tuple[str, Tensor]]:
        return named_tensors(self)

    def segmentation_tensors(self, include_interaction: bool = True) -> List[Tensor]:
        """Parameters optimised by the segmentation objective"""
        groups: List[object] = [self.encoder2d, self.encoder3d, self.head2d, self.head3d]
        if include_interaction:
            groups.append(self.interaction)
        return [t for g in groups for _, t in named_tensors(g)]

    def discriminator(self, slot: str) -> DiscriminatorParams:
        return self.discriminators[slot]

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.value.copy() for name, t in self.named_tensors()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Overwrite values from a name → array mapping.

        Raises:
            FormatError: on missing names
            ShapeError: on shape mismatch
        """
        for name, tensor in self.named_tensors():
            if name not in state:
                raise FormatError(f"checkpoint lacks parameter {name}")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ShapeError(f"{name}: checkpoint shape {value.shape} != {tensor.shape}")
            tensor.value = value.copy()
            tensor.grad = None

    def copy(self) -> "ModelParams":
        """Deep copy with fresh tensors (gradients dropped)"""
        clone = ModelParams.init(
            np.random.default_rng(0),
            feature_dim=self.feature_dim,
            num_classes=self.num_classes,
            disc_hidden=self.discriminators[DISC_CROSS_MODAL].fc1.n_out
            if DISC_CROSS_MODAL in self.discriminators else config.DISC_HIDDEN,
            conv1_channels=self.encoder2d.conv1.n_out,
            mlp_hidden=self.encoder3d.fc1.n_out,
        )
        clone.load_state_dict(self.state_dict())
        return clone

    def check(self) -> None:
        """Validate the width contracts between groups"""
        f = self.feature_dim
        if self.head3d.n_in != f or self.encoder2d.conv2.n_out != f or self.encoder3d.fc3.n_out != f:
            raise ShapeError("feature width differs between encoders and heads")
        for slot, disc in self.discriminators.items():
            expected = 2 * f if slot == DISC_CROSS_MODAL else f
            if disc.input_width != expected:
                raise ShapeError(f"discriminator {slot} expects width {expected}, has {disc.input_width}")
