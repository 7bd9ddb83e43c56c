"""
UniDA3D network forward pass.

project → encode 2D / 3D → interact → segmentation heads. Heads read the
interacted features, so the interaction weights learn from the segmentation
objective; with variant none they read the raw encoder features.
"""

from dataclasses import dataclass
from typing import Optional, Set

import numpy as np

from src.core.autodiff import Tensor
from src.core.encoders import encode_2d, encode_3d, project_points, segment
from src.core.interaction import AttentionMode, FusionMode, InteractionVariant, interact
from src.core.losses import fuse_predictions
from src.models.frame import FeaturePair, Frame
from src.models.params import ModelParams


@dataclass
class ForwardOutput:
    """
    Everything one forward pass produces for a frame.

    Attributes:
        point_index: indices into frame.points of the evaluated points
        raw: encoder features (f2d, f3d)
        interacted: interaction output (f̂2d, f̂3d)
        logits2d, logits3d: N×C class scores per branch
    """
    point_index: np.ndarray
    raw: FeaturePair
    interacted: FeaturePair
    logits2d: Tensor
    logits3d: Tensor

    @property
    def num_points(self) -> int:
        return len(self.point_index)

    def fused_probs(self) -> np.ndarray:
        return fuse_predictions(self.logits2d.value, self.logits3d.value)


def subsample(count: int, max_points: Optional[int], rng: Optional[np.random.Generator]) -> np.ndarray:
    """Sorted positions of at most max_points out of count, drawn without replacement"""
    if max_points is None or count <= max_points or rng is None:
        return np.arange(count)
    return np.sort(rng.choice(count, size=max_points, replace=False))


class UniDAModel:
    """
    Parameters plus the architectural switches that define the forward pass.

    Usage:
        model = UniDAModel(ModelParams.init(rng))
        out = model.forward(frame)
        loss = branch_loss(out.logits2d, out.logits3d, frame.labels[out.point_index])
    """

    def __init__(
        self,
        params: ModelParams,
        variant: InteractionVariant = InteractionVariant.SYMMETRIC,
        fusion_mode: FusionMode = FusionMode.MULTIPLY,
        attention: AttentionMode = AttentionMode.LITERAL,
        coordinate_scale: float = 10.0,
    ):
        params.check()
        self.params = params
        self.variant = variant
        self.fusion_mode = fusion_mode
        self.attention = attention
        self.coordinate_scale = coordinate_scale
        self.trained_discriminators: Set[str] = set()

    def encode(
        self,
        frame: Frame,
        max_points: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> FeaturePair:
        """
        Raw aligned features of the projected (and optionally subsampled) points.

        Raises:
            EmptyProjectionError: if no point of the frame projects into its image
        """
        pixels, kept = project_points(frame.points, frame.calibration, frame.image_size)
        chosen = subsample(len(kept), max_points, rng)
        index = kept[chosen]
        f2d = encode_2d(frame.image, pixels[chosen], self.params.encoder2d)
        f3d = encode_3d(frame.points[index], self.params.encoder3d, self.coordinate_scale)
        return FeaturePair(point_index=index, f2d=f2d, f3d=f3d)

    def interact(self, raw: FeaturePair) -> FeaturePair:
        g2d, g3d = interact(
            raw.f2d, raw.f3d, self.params.interaction,
            self.variant, self.fusion_mode, self.attention,
        )
        return FeaturePair(point_index=raw.point_index, f2d=g2d, f3d=g3d)

    def forward(
        self,
        frame: Frame,
        max_points: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> ForwardOutput:
        raw = self.encode(frame, max_points, rng)
        enhanced = self.interact(raw)
        return ForwardOutput(
            point_index=raw.point_index,
            raw=raw,
            interacted=enhanced,
            logits2d=segment(enhanced.f2d, self.params.head2d),
            logits3d=segment(enhanced.f3d, self.params.head3d),
        )

    def settings(self) -> dict:
        return {
            "variant": self.variant.value,
            "fusion_mode": self.fusion_mode.value,
            "attention": self.attention.value,
            "coordinate_scale": self.coordinate_scale,
        }
