"""
Synthetic multi-modal scene generator.

A scene is a ground plane plus seeded primitives (boxes, vertical cylinders,
walls, poles, clutter). A LiDAR co-located with the camera casts rays into
the scene to produce a labeled point cloud; the image is rendered by casting
one camera ray per pixel and shading the hit class colour by depth and
illumination.

Point-cloud frame: x forward, y left, z up, ground at z = 0, sensor at
(0, 0, sensor_height).
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.core.errors import ArgumentError, SpecError
from src.infrastructure.logger import get_logger
from src.models.dataset import SPLIT_TEST, SPLIT_TRAIN, Dataset, DatasetManifest, FrameEntry
from src.models.domain_spec import DomainSpec
from src.models.frame import FLAG_CAMERA_VISIBLE, Calibration, Domain, Frame

logger = get_logger(__name__)

SKY_COLOR = np.array([0.55, 0.70, 0.90])
LIDAR_AZIMUTH = np.deg2rad(50.0)
LIDAR_ELEVATION = (np.deg2rad(-25.0), np.deg2rad(3.0))
PLACEMENT_RANGE = (5.0, 30.0)
_EPS = 1e-9


@dataclass
class Scene:
    """
    Placed primitives.

    Attributes:
        ground_class: label of the ground plane, or -1 without one
        box_lo, box_hi: B×3 axis-aligned box corners
        box_class: B labels
        cyl: K×4 rows (center x, center y, radius, height)
        cyl_class: K labels
    """
    ground_class: int
    box_lo: np.ndarray
    box_hi: np.ndarray
    box_class: np.ndarray
    cyl: np.ndarray
    cyl_class: np.ndarray


def _place_objects(spec: DomainSpec, rng: np.random.Generator) -> Scene:
    s = spec.shape_scale
    weights = np.array([
        w if cls.primitive != "plane" else 0.0
        for cls, w in zip(spec.classes, spec.class_weights)
    ])
    n_objects = int(rng.integers(spec.objects_min, spec.objects_max + 1))
    if weights.sum() <= 0.0:
        n_objects = 0

    boxes_lo: List[np.ndarray] = []
    boxes_hi: List[np.ndarray] = []
    box_class: List[int] = []
    cyl: List[Tuple[float, float, float, float]] = []
    cyl_class: List[int] = []

    for _ in range(n_objects):
        label = int(rng.choice(len(weights), p=weights / weights.sum()))
        primitive = spec.classes[label].primitive
        x = rng.uniform(*PLACEMENT_RANGE)
        y = rng.uniform(-0.9 * x, 0.9 * x)
        if primitive == "box":
            size = np.array([rng.uniform(3.5, 4.5), rng.uniform(1.6, 2.0), rng.uniform(1.3, 1.7)]) * s
        elif primitive == "wall":
            size = np.array([1.0, rng.uniform(6.0, 12.0), rng.uniform(5.0, 10.0)]) * s
        elif primitive == "clutter":
            size = rng.uniform(0.4, 1.0, size=3) * s
        elif primitive == "cylinder":
            cyl.append((x, y, rng.uniform(0.4, 0.8) * s, rng.uniform(4.0, 6.0) * s))
            cyl_class.append(label)
            continue
        else:
            cyl.append((x, y, 0.1 * s, rng.uniform(4.0, 6.0) * s))
            cyl_class.append(label)
            continue
        center = np.array([x, y, 0.0])
        boxes_lo.append(center - np.array([size[0] / 2, size[1] / 2, 0.0]))
        boxes_hi.append(center + np.array([size[0] / 2, size[1] / 2, size[2]]))
        box_class.append(label)

    planes = [i for i, cls in enumerate(spec.classes) if cls.primitive == "plane"]
    return Scene(
        ground_class=planes[0] if planes else -1,
        box_lo=np.array(boxes_lo).reshape(-1, 3),
        box_hi=np.array(boxes_hi).reshape(-1, 3),
        box_class=np.array(box_class, dtype=np.int32),
        cyl=np.array(cyl).reshape(-1, 4),
        cyl_class=np.array(cyl_class, dtype=np.int32),
    )


def cast_rays(
    scene: Scene,
    origin: np.ndarray,
    directions: np.ndarray,
    max_range: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nearest hit along each ray.

    Args:
        scene: placed primitives
        origin: ray origin (3,)
        directions: R×3 unit directions
        max_range: hits further than this are misses

    Returns:
        (distance per ray with inf for misses, label per ray with -1 for misses)
    """
    n = len(directions)
    best_t = np.full(n, np.inf)
    best_label = np.full(n, -1, dtype=np.int32)

    def take(t: np.ndarray, label: np.ndarray) -> None:
        closer = t < best_t
        best_t[closer] = t[closer]
        best_label[closer] = label[closer]

    if scene.ground_class >= 0:
        dz = directions[:, 2]
        with np.errstate(divide="ignore"):
            t = np.where(dz < -_EPS, -origin[2] / np.where(dz < -_EPS, dz, -1.0), np.inf)
        take(t, np.full(n, scene.ground_class, dtype=np.int32))

    if len(scene.box_class):
        d = np.where(np.abs(directions) < _EPS, _EPS, directions)[:, None, :]
        t1 = (scene.box_lo[None] - origin) / d
        t2 = (scene.box_hi[None] - origin) / d
        t_near = np.minimum(t1, t2).max(axis=2)
        t_far = np.maximum(t1, t2).min(axis=2)
        hit = (t_far >= t_near) & (t_near > _EPS)
        t = np.where(hit, t_near, np.inf)
        nearest = t.argmin(axis=1)
        take(t[np.arange(n), nearest], scene.box_class[nearest])

    if len(scene.cyl_class):
        cx, cy, r, h = (scene.cyl[:, i][None] for i in range(4))
        dx, dy = directions[:, 0:1], directions[:, 1:2]
        ox, oy = origin[0] - cx, origin[1] - cy
        a = dx * dx + dy * dy
        b = 2.0 * (dx * ox + dy * oy)
        c = ox * ox + oy * oy - r * r
        disc = b * b - 4.0 * a * c
        ok = (disc >= 0.0) & (a > _EPS)
        safe_a = np.where(a > _EPS, a, 1.0)
        t = (-b - np.sqrt(np.where(ok, disc, 0.0))) / (2.0 * safe_a)
        z = origin[2] + t * directions[:, 2:3]
        t = np.where(ok & (t > _EPS) & (z >= 0.0) & (z <= h), t, np.inf)
        nearest = t.argmin(axis=1)
        take(t[np.arange(n), nearest], scene.cyl_class[nearest])

    miss = best_t > max_range
    best_t[miss] = np.inf
    best_label[miss] = -1
    return best_t, best_label


def camera_visible(points: np.ndarray, calib: Calibration, image_size: Tuple[int, int]) -> np.ndarray:
    """Boolean mask of points in front of the camera that land inside the image"""
    h, w = image_size
    cam = calib.to_camera(points)
    z = cam[:, 2]
    in_front = z > 0.0
    safe_z = np.where(in_front, z, 1.0)
    u = calib.fx * cam[:, 0] / safe_z + calib.cx
    v = calib.fy * cam[:, 1] / safe_z + calib.cy
    return in_front & (u >= 0.0) & (u < w) & (v >= 0.0) & (v < h)


def _scan(spec: DomainSpec, scene: Scene, origin: np.ndarray, rng: np.random.Generator):
    n_rays = int(rng.integers(spec.points_min, spec.points_max + 1))
    azimuth = rng.uniform(-LIDAR_AZIMUTH, LIDAR_AZIMUTH, size=n_rays)
    elevation = rng.uniform(*LIDAR_ELEVATION, size=n_rays)
    directions = np.stack([
        np.cos(elevation) * np.cos(azimuth),
        np.cos(elevation) * np.sin(azimuth),
        np.sin(elevation),
    ], axis=1)
    t, labels = cast_rays(scene, origin, directions, spec.max_range)
    hit = np.isfinite(t)
    points = origin + directions[hit] * t[hit, None]
    labels = labels[hit]

    keep = rng.random(len(points)) >= spec.dropout
    if not keep.any() and len(points):
        keep[int(np.argmin(t[hit]))] = True
    points = points[keep] + rng.normal(0.0, spec.geometry_noise, size=(int(keep.sum()), 3))
    return points, labels[keep]


def _render(spec: DomainSpec, scene: Scene, calib: Calibration, rng: np.random.Generator) -> np.ndarray:
    h, w = spec.image_size
    rows, cols = np.divmod(np.arange(h * w), w)
    cam_dirs = np.stack([
        (cols + 0.5 - calib.cx) / calib.fx,
        (rows + 0.5 - calib.cy) / calib.fy,
        np.ones(h * w),
    ], axis=1)
    directions = cam_dirs @ calib.rotation
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    center = -calib.rotation.T @ calib.translation
    t, labels = cast_rays(scene, center, directions, spec.max_range)

    palette = np.array([cls.color for cls in spec.classes])
    hit = labels >= 0
    colors = np.tile(SKY_COLOR, (h * w, 1))
    shade = 0.6 + 0.4 * np.exp(-np.where(hit, t, 0.0) / 25.0)
    colors[hit] = palette[labels[hit]] * shade[hit, None]
    light = 0.1 + 0.9 * spec.illumination
    image = colors * light + spec.brightness_offset + rng.normal(0.0, spec.image_noise, size=colors.shape)
    return np.clip(image, 0.0, 1.0).reshape(h, w, 3)


def generate_frame(
    spec: DomainSpec,
    seed: int,
    frame_id: int = 0,
    domain: Domain = Domain.SOURCE,
) -> Frame:
    """
    Draw one labeled frame.

    The frame is a pure function of (spec, seed, frame_id, domain).

    Raises:
        SpecError: if the spec is degenerate
    """
    spec.check()
    rng = np.random.default_rng(seed)
    calib = spec.calibration()
    scene = _place_objects(spec, rng)
    origin = -calib.rotation.T @ calib.translation
    points, labels = _scan(spec, scene, origin, rng)
    if len(points) == 0:
        raise SpecError(f"spec {spec.name!r} produced an empty scan")
    image = _render(spec, scene, calib, rng)
    flags = np.where(
        camera_visible(points, calib, spec.image_size), FLAG_CAMERA_VISIBLE, 0
    ).astype(np.uint8)
    return Frame(
        id=frame_id,
        domain=domain,
        image=image,
        points=points,
        labels=labels.astype(np.int32),
        calibration=calib,
        flags=flags,
    )


def _child_seeds(seq: np.random.SeedSequence, n: int) -> List[int]:
    return [int(child.generate_state(1)[0]) for child in seq.spawn(n)]


def generate_domain_pair(
    source_spec: DomainSpec,
    target_spec: DomainSpec,
    counts: Tuple[int, int, int],
    overlap: float,
    seed: int,
) -> Tuple[Dataset, Dataset]:
    """
    Generate a source set that mixes in target-like frames, plus a pure
    target set split into train and test.

    Args:
        source_spec: generator settings of the source domain
        target_spec: generator settings of the target domain
        counts: (source frames, target train frames, target test frames)
        overlap: fraction ρ of source frames drawn from target_spec
        seed: master seed

    Returns:
        (source dataset, target dataset); source ids come first, target ids
        continue after them, so ids are unique across both

    Raises:
        ArgumentError: on a zero count or ρ outside [0, 1]
        SpecError: if the two specs disagree on the class list
    """
    n_source, n_train, n_test = (int(c) for c in counts)
    if min(n_source, n_train, n_test) < 1:
        raise ArgumentError(f"every frame count must be positive, got {counts}")
    if not 0.0 <= overlap <= 1.0:
        raise ArgumentError(f"overlap must lie in [0, 1], got {overlap}")
    if source_spec.class_names != target_spec.class_names:
        raise SpecError("source and target specs must share one class list")
    source_spec.check()
    target_spec.check()

    membership_seq, source_seq, target_seq = np.random.SeedSequence(seed).spawn(3)
    n_like = int(round(overlap * n_source))
    target_like = sorted(
        int(i) for i in np.random.default_rng(membership_seq).permutation(n_source)[:n_like]
    )
    like_set = set(target_like)

    source_frames = {}
    for frame_id, frame_seed in enumerate(_child_seeds(source_seq, n_source)):
        spec = target_spec if frame_id in like_set else source_spec
        source_frames[frame_id] = generate_frame(spec, frame_seed, frame_id, Domain.SOURCE)

    target_frames = {}
    for offset, frame_seed in enumerate(_child_seeds(target_seq, n_train + n_test)):
        frame_id = n_source + offset
        target_frames[frame_id] = generate_frame(target_spec, frame_seed, frame_id, Domain.TARGET)

    source_manifest = DatasetManifest(
        domain=Domain.SOURCE,
        entries=[FrameEntry(id=i, split=SPLIT_TRAIN) for i in sorted(source_frames)],
        spec_hash=f"{source_spec.spec_hash()}+{target_spec.spec_hash()}",
        seed=seed,
        oracle={"target_like": target_like},
    )
    target_manifest = DatasetManifest(
        domain=Domain.TARGET,
        entries=[
            FrameEntry(id=i, split=SPLIT_TRAIN if i - n_source < n_train else SPLIT_TEST)
            for i in sorted(target_frames)
        ],
        spec_hash=target_spec.spec_hash(),
        seed=seed,
    )
    logger.info(
        f"Generated {n_source} source frames ({n_like} target-like) and "
        f"{n_train}+{n_test} target frames, seed {seed}"
    )
    return Dataset(source_manifest, source_frames), Dataset(target_manifest, target_frames)
