"""
Self-test Service

Invariant suite run by `main.py selftest`: gradient checks on the composed
network, softmax row sums, selection and mIoU against brute-force oracles,
and the projection round trip.
"""

import sys
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, List, Optional, TextIO, Tuple

import numpy as np

from src.core.autodiff import Tensor, add, cross_entropy, softmax_rows
from src.core.discriminator import bce_domain_loss, discriminate
from src.core.encoders import encode_2d, encode_3d, project_points, segment
from src.core.gradcheck import grad_check
from src.core.interaction import interact
from src.core.metrics import confusion, miou
from src.core.selection import select_top
from src.infrastructure.logger import get_logger
from src.models.frame import Calibration
from src.models.params import DISC_CROSS_MODAL, ModelParams
from src.models.selection import Budget

logger = get_logger(__name__)

GRAD_TOLERANCE = 1e-4
EXACT_TOLERANCE = 1e-12
ORACLE_TRIALS = 500


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _tiny_scene(rng: np.random.Generator, n: int = 5) -> Tuple[np.ndarray, np.ndarray, Calibration]:
    """8×8 image and n points in front of an identity-pose camera"""
    calib = Calibration(fx=4.0, fy=4.0, cx=4.0, cy=4.0)
    image = rng.uniform(0.0, 1.0, size=(8, 8, 3))
    xy = rng.uniform(-0.8, 0.8, size=(n, 2))
    z = rng.uniform(1.0, 3.0, size=(n, 1))
    return image, np.concatenate([xy * z, z], axis=1), calib


def check_composed_gradients(seed: int = 0) -> CheckResult:
    """discriminate ∘ interact ∘ encoders plus both segmentation losses, N=5, F=4, C=3"""
    rng = np.random.default_rng(seed)
    params = ModelParams.init(rng, feature_dim=4, num_classes=3, disc_hidden=6, conv1_channels=3, mlp_hidden=5)
    image, points, calib = _tiny_scene(rng)
    pixels, kept = project_points(points, calib, (8, 8))
    points = points[kept]
    labels = rng.integers(0, 3, size=len(kept))

    def loss_fn() -> Tensor:
        f2d = encode_2d(image, pixels, params.encoder2d)
        f3d = encode_3d(points, params.encoder3d)
        e2d, e3d = interact(f2d, f3d, params.interaction)
        probs, _ = discriminate(e2d, e3d, params.discriminator(DISC_CROSS_MODAL))
        seg = add(cross_entropy(segment(e2d, params.head2d), labels),
                  cross_entropy(segment(e3d, params.head3d), labels))
        return add(bce_domain_loss(probs, 1), seg)

    tensors = [t for name, t in params.named_tensors()
               if not name.startswith(("discriminators.two_d", "discriminators.three_d"))]
    err = grad_check(loss_fn, tensors)
    return CheckResult("gradients", err < GRAD_TOLERANCE, f"max relative error {err:.2e} (< {GRAD_TOLERANCE:g})")


def check_softmax_rows(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        m = rng.normal(0.0, 10.0, size=(int(rng.integers(1, 8)), int(rng.integers(1, 8))))
        rows = softmax_rows(m, scale=float(rng.uniform(0.5, 4.0))).value.sum(axis=1)
        worst = max(worst, float(np.max(np.abs(rows - 1.0))))
    return CheckResult("softmax rows", worst < 1e-12, f"max |row sum - 1| {worst:.1e}")


def check_selection_oracle(seed: int = 0) -> CheckResult:
    """
    select_top against exhaustive enumeration of every size-B subset.

    The oracle keeps the subset with the largest total score, ties going to
    the lexicographically smallest sorted id list, and orders it by score
    descending then id ascending.
    """
    rng = np.random.default_rng(seed)
    for trial in range(ORACLE_TRIALS):
        n = int(rng.integers(1, 11))
        ids = rng.permutation(100)[:n].tolist()
        scores = (rng.integers(0, 4, size=n) / 4.0).tolist()  # ties on purpose
        b = int(rng.integers(1, n + 1))
        picked = select_top(zip(ids, scores), Budget.count(b)).frame_ids

        by_id = dict(zip(ids, scores))
        best = max(
            (sorted(c) for c in combinations(ids, b)),
            key=lambda c: (sum(by_id[i] for i in c), [-i for i in c]),
        )
        expected = sorted(best, key=lambda i: (-by_id[i], i))
        if picked != expected:
            return CheckResult("selection oracle", False, f"trial {trial}: {picked} != {expected}")
    return CheckResult("selection oracle", True, f"{ORACLE_TRIALS} random instances agree")


def check_miou_oracle(seed: int = 0) -> CheckResult:
    """mIoU against per-point TP / FP / FN counting"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(ORACLE_TRIALS):
        c = int(rng.integers(2, 6))
        n = int(rng.integers(1, 201))
        gt = rng.integers(-1, c, size=n)
        pred = rng.integers(0, c, size=n)
        if not np.any(gt >= 0):
            continue
        _, mean = miou(confusion(gt, pred, c))

        valid = gt >= 0
        ious = []
        for k in range(c):
            tp = int(np.sum(valid & (gt == k) & (pred == k)))
            fp = int(np.sum(valid & (gt != k) & (pred == k)))
            fn = int(np.sum(valid & (gt == k) & (pred != k)))
            if tp + fp + fn:
                ious.append(tp / (tp + fp + fn))
        worst = max(worst, abs(mean - float(np.mean(ious))))
    return CheckResult(
        "mIoU oracle", worst < EXACT_TOLERANCE, f"{ORACLE_TRIALS} random instances, max deviation {worst:.1e}"
    )


def check_projection_round_trip(seed: int = 0) -> CheckResult:
    """Project, lift pixels back with the camera depth, compare to the input points"""
    rng = np.random.default_rng(seed)
    angle = rng.uniform(-0.3, 0.3)
    rotation = np.array([
        [np.cos(angle), 0.0, np.sin(angle)],
        [0.0, 1.0, 0.0],
        [-np.sin(angle), 0.0, np.cos(angle)],
    ])
    calib = Calibration(fx=40.0, fy=40.0, cx=32.0, cy=32.0, rotation=rotation, translation=rng.normal(0, 0.2, 3))
    points = np.concatenate([rng.uniform(-3, 3, size=(200, 2)), rng.uniform(2, 20, size=(200, 1))], axis=1)
    pixels, kept = project_points(points, calib, (64, 64))

    depth = calib.to_camera(points[kept])[:, 2]
    cam = np.stack([
        (pixels[:, 0] - calib.cx) / calib.fx * depth,
        (pixels[:, 1] - calib.cy) / calib.fy * depth,
        depth,
    ], axis=1)
    restored = (cam - calib.translation) @ calib.rotation
    err = float(np.max(np.abs(restored - points[kept])))
    return CheckResult("projection round trip", err < 1e-9, f"{len(kept)} points, max error {err:.1e}")


CHECKS: List[Callable[[int], CheckResult]] = [
    check_composed_gradients,
    check_softmax_rows,
    check_selection_oracle,
    check_miou_oracle,
    check_projection_round_trip,
]


def run_selftest(seed: int = 0, out: Optional[TextIO] = None) -> bool:
    """
    Run every check, print one line each.

    Returns:
        True when all checks pass
    """
    out = out or sys.stdout
    results = []
    for check in CHECKS:
        try:
            result = check(seed)
        except Exception as exc:  # a crashing check is a failed check
            result = CheckResult(check.__name__.replace("check_", "").replace("_", " "), False, repr(exc))
        results.append(result)
        print(result.line(), file=out)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error(f"Self-test failed: {', '.join(failed)}")
    else:
        logger.info(f"Self-test passed ({len(results)} checks)")
    return not failed
