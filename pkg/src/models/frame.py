"""
Frame model for UniDA3D

One synchronized image + point-cloud sample with per-point labels, plus the
calibration that links the two and the aligned feature pair derived from it.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from config import config
from src.core.autodiff import Tensor
from src.core.errors import ArgumentError, ShapeError


class Domain(Enum):
    """Domain tag of a frame"""
    SOURCE = "source"
    TARGET = "target"

    @classmethod
    def from_string(cls, value: str) -> "Domain":
        """Create Domain from string value"""
        for domain in cls:
            if domain.value == value.lower():
                return domain
        raise ArgumentError(f"unknown domain {value!r}")

    @property
    def code(self) -> int:
        """Binary code used by the frame file format and the discriminator"""
        return config.SOURCE_DOMAIN_LABEL if self is Domain.SOURCE else config.TARGET_DOMAIN_LABEL

    @classmethod
    def from_code(cls, code: int) -> "Domain":
        return cls.SOURCE if code == config.SOURCE_DOMAIN_LABEL else cls.TARGET


# Bit set in Frame.flags for points the generator placed inside the camera view
FLAG_CAMERA_VISIBLE = 1


@dataclass
class Calibration:
    """
    Pinhole camera intrinsics plus the rigid transform from the point-cloud
    frame to the camera frame (p_cam = R·p + t).

    Attributes:
        fx, fy: focal lengths (pixels)
        cx, cy: principal point (pixels)
        rotation: 3×3 orthonormal matrix
        translation: length-3 vector (meters)
    """
    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        """Validate fields after initialization"""
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if not (self.fx > 0 and self.fy > 0):
            raise ArgumentError(f"focal lengths must be positive, got {self.fx}, {self.fy}")
        if self.rotation.shape != (3, 3) or self.translation.shape != (3,):
            raise ShapeError("calibration pose must be a 3×3 rotation and a 3-vector")
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(3), rtol=0.0, atol=1e-9):
            raise ArgumentError("calibration rotation is not orthonormal")

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        """Transform N×3 points into the camera frame"""
        return points @ self.rotation.T + self.translation

    def to_array(self) -> np.ndarray:
        """Flat float64 layout: fx, fy, cx, cy, R (row-major), t"""
        return np.concatenate([
            [self.fx, self.fy, self.cx, self.cy],
            self.rotation.reshape(-1),
            self.translation,
        ])

    @classmethod
    def from_array(cls, values: np.ndarray) -> "Calibration":
        values = np.asarray(values, dtype=np.float64)
        return cls(
            fx=float(values[0]), fy=float(values[1]),
            cx=float(values[2]), cy=float(values[3]),
            rotation=values[4:13].reshape(3, 3).copy(),
            translation=values[13:16].copy(),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Calibration):
            return NotImplemented
        return np.array_equal(self.to_array(), other.to_array())


@dataclass(eq=False)
class Frame:
    """
    One multi-modal sample.

    Attributes:
        id: unique frame identifier
        domain: source or target
        image: H×W×3 reals in [0, 1]
        points: N_raw×3 meters, point-cloud frame
        labels: N_raw class ids in [0, C) or the ignore sentinel
        calibration: camera model linking points to pixels
        flags: N_raw per-point bit flags (see FLAG_CAMERA_VISIBLE)
    """
    id: int
    domain: Domain
    image: np.ndarray
    points: np.ndarray
    labels: np.ndarray
    calibration: Calibration
    flags: Optional[np.ndarray] = None

    def __post_init__(self):
        """Validate fields after initialization"""
        self.image = np.asarray(self.image, dtype=np.float64)
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.flags is None:
            self.flags = np.zeros(len(self.points), dtype=np.uint8)
        self.flags = np.asarray(self.flags, dtype=np.uint8)
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise ShapeError(f"image must be H×W×3, got {self.image.shape}")
        if self.labels.shape != (len(self.points),):
            raise ShapeError(
                f"frame {self.id}: {len(self.labels)} labels for {len(self.points)} points"
            )
        if self.flags.shape != (len(self.points),):
            raise ShapeError(f"frame {self.id}: flags length differs from points")

    @property
    def image_size(self) -> tuple:
        """(H, W)"""
        return self.image.shape[0], self.image.shape[1]

    @property
    def num_points(self) -> int:
        return len(self.points)

    def with_labels(self, labels: np.ndarray) -> "Frame":
        """Copy of this frame carrying different per-point labels"""
        return Frame(
            id=self.id,
            domain=self.domain,
            image=self.image,
            points=self.points,
            labels=labels,
            calibration=self.calibration,
            flags=self.flags,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.id == other.id
            and self.domain == other.domain
            and self.calibration == other.calibration
            and np.array_equal(self.image, other.image)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.flags, other.flags)
        )


@dataclass
class FeaturePair:
    """
    Aligned per-point features of one frame.

    Row i of f2d and f3d describe the same 3D point, points[point_index[i]].
    """
    point_index: np.ndarray
    f2d: Tensor
    f3d: Tensor

    def __post_init__(self):
        if self.f2d.shape != self.f3d.shape:
            raise ShapeError(f"feature pair shapes differ: {self.f2d.shape} vs {self.f3d.shape}")
        if self.f2d.shape[0] != len(self.point_index):
            raise ShapeError("feature rows do not match point_index length")

    @property
    def num_points(self) -> int:
        return self.f2d.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.f2d.shape[1]
