"""
Point-to-image projection and the toy 2D / 3D feature encoders.

2D branch: two 3×3 convolutions (stride 1, zero padding) with ReLU, widths
C1 then F. The first runs densely over the image; the second is evaluated
only at the pixels points project to, which equals a dense second layer
followed by nearest-cell lookup.

3D branch: per-point MLP on (x, y, z, range) → 16 → F, concatenated with the
mean-pooled scene embedding, then a linear map 2F → F.
"""

from typing import Tuple

import numpy as np

from src.core.autodiff import (
    Tensor, affine, concat_cols, mean_rows, patches3x3, relu, repeat_rows, reshape,
)
from src.core.errors import BoundsError, EmptyProjectionError, ShapeError
from src.models.frame import Calibration
from src.models.params import Encoder2DParams, Encoder3DParams, Linear


def project_points(
    points: np.ndarray,
    calib: Calibration,
    image_size: Tuple[int, int],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pinhole projection φ of a point cloud onto the image plane.

    u = fx·x/z + cx, v = fy·y/z + cy in camera coordinates. Points behind the
    camera (z <= 0) or landing outside [0, W) × [0, H) are dropped.

    Args:
        points: N_raw×3 points in the point-cloud frame
        calib: camera calibration
        image_size: (H, W)

    Returns:
        (pixel coords N×2 as (u, v), kept indices N, strictly increasing)

    Raises:
        EmptyProjectionError: if no point projects into the image
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    h, w = image_size
    cam = calib.to_camera(points)
    z = cam[:, 2]
    in_front = z > 0.0
    safe_z = np.where(in_front, z, 1.0)
    u = calib.fx * cam[:, 0] / safe_z + calib.cx
    v = calib.fy * cam[:, 1] / safe_z + calib.cy
    keep = in_front & (u >= 0.0) & (u < w) & (v >= 0.0) & (v < h)
    kept = np.nonzero(keep)[0]
    if kept.size == 0:
        raise EmptyProjectionError(f"none of {len(points)} points projects into the {h}×{w} image")
    return np.stack([u[kept], v[kept]], axis=1), kept


def pixel_cells(pixel_coords: np.ndarray, image_size: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nearest-cell (row, col) of each (u, v) coordinate.

    Raises:
        BoundsError: if a coordinate lies outside the image
    """
    pixel_coords = np.asarray(pixel_coords, dtype=np.float64).reshape(-1, 2)
    h, w = image_size
    u, v = pixel_coords[:, 0], pixel_coords[:, 1]
    if np.any((u < 0) | (u >= w) | (v < 0) | (v >= h)):
        raise BoundsError(f"pixel coordinate outside the {h}×{w} image")
    return np.floor(v).astype(np.int64), np.floor(u).astype(np.int64)


def encode_2d(image: np.ndarray, pixel_coords: np.ndarray, params: Encoder2DParams) -> Tensor:
    """
    Per-point image features: row i is the conv feature at point i's pixel.

    Returns:
        N×F feature matrix
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ShapeError(f"image must be H×W×C, got {image.shape}")
    h, w, _ = image.shape
    rows, cols = pixel_cells(pixel_coords, (h, w))

    grid_r, grid_c = np.divmod(np.arange(h * w), w)
    dense = patches3x3(Tensor(image), grid_r, grid_c)
    hidden = relu(affine(dense, params.conv1.weight, params.conv1.bias))
    fmap = reshape(hidden, (h, w, params.conv1.n_out))
    return relu(affine(patches3x3(fmap, rows, cols), params.conv2.weight, params.conv2.bias))


def point_inputs(points: np.ndarray, coordinate_scale: float = 10.0) -> np.ndarray:
    """(x, y, z, range) per point, divided by coordinate_scale"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    rng = np.linalg.norm(points, axis=1, keepdims=True)
    return np.concatenate([points, rng], axis=1) / coordinate_scale


def encode_3d(points: np.ndarray, params: Encoder3DParams, coordinate_scale: float = 10.0) -> Tensor:
    """
    Permutation-equivariant per-point features.

    Returns:
        N×F feature matrix
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] < 1:
        raise ShapeError(f"points must be N×3 with N >= 1, got {points.shape}")
    x = Tensor(point_inputs(points, coordinate_scale))
    local = relu(affine(x, params.fc1.weight, params.fc1.bias))
    local = relu(affine(local, params.fc2.weight, params.fc2.bias))
    context = repeat_rows(mean_rows(local), points.shape[0])
    return affine(concat_cols(local, context), params.fc3.weight, params.fc3.bias)


def segment(features: Tensor, head: Linear) -> Tensor:
    """
    Per-point class logits.

    Raises:
        ShapeError: if the head does not match the feature width
    """
    if features.ndim != 2 or features.shape[1] != head.n_in:
        raise ShapeError(f"head expects width {head.n_in}, features are {features.shape}")
    return affine(features, head.weight, head.bias)
