"""
Dataset persistence for UniDA3D

Directory layout:
    <dir>/manifest.json          manifest with per-file SHA-256 and a manifest hash
    <dir>/frames/<id>.bin        one fixed-layout little-endian frame file

Frame file layout:
    magic "UDF3" | u32 version | i64 id | u8 domain | u32 H | u32 W |
    f8[H·W·3] image | u32 N | f8[N·3] points | i4[N] labels | u1[N] flags |
    f8[16] calibration (fx, fy, cx, cy, R row-major, t)
"""

import hashlib
import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Union

from config import config
from src.core.errors import FormatError, IntegrityError
from src.infrastructure.binary_codec import (
    Reader, join, pack_array, pack_int64, pack_uint32, pack_uint8, read_bytes,
)
from src.infrastructure.logger import get_logger, log_exception
from src.models.dataset import Dataset, DatasetManifest
from src.models.frame import Calibration, Domain, Frame

logger = get_logger(__name__)

FRAME_MAGIC = b"UDF3"
MANIFEST_FILE = "manifest.json"
FRAMES_DIR = "frames"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def encode_frame(frame: Frame) -> bytes:
    """Serialize one frame to its binary layout"""
    h, w = frame.image_size
    return join([
        FRAME_MAGIC,
        pack_uint32(config.FRAME_FORMAT_VERSION),
        pack_int64(frame.id),
        pack_uint8(frame.domain.code),
        pack_uint32(h),
        pack_uint32(w),
        pack_array(frame.image, "<f8"),
        pack_uint32(frame.num_points),
        pack_array(frame.points, "<f8"),
        pack_array(frame.labels, "<i4"),
        pack_array(frame.flags, "<u1"),
        pack_array(frame.calibration.to_array(), "<f8"),
    ])


def decode_frame(data: bytes, path: Union[str, Path, None] = None) -> Frame:
    """
    Parse a frame file.

    Raises:
        FormatError: on bad magic, unsupported version, truncation or trailing bytes
    """
    reader = Reader(data, path)
    reader.magic(FRAME_MAGIC)
    reader.version(config.FRAME_FORMAT_VERSION)
    frame_id = reader.int64("frame id")
    domain_code = reader.uint8("domain")
    if domain_code not in (config.SOURCE_DOMAIN_LABEL, config.TARGET_DOMAIN_LABEL):
        raise FormatError(f"unknown domain code {domain_code}", path)
    h = reader.uint32("image height")
    w = reader.uint32("image width")
    image = reader.array("<f8", (h, w, 3), "image")
    n = reader.uint32("point count")
    points = reader.array("<f8", (n, 3), "points")
    labels = reader.array("<i4", (n,), "labels")
    flags = reader.array("<u1", (n,), "flags")
    calib = reader.array("<f8", (16,), "calibration")
    reader.finish()
    try:
        calibration = Calibration.from_array(calib)
        return Frame(
            id=frame_id,
            domain=Domain.from_code(domain_code),
            image=image,
            points=points,
            labels=labels,
            calibration=calibration,
            flags=flags,
        )
    except ValueError as exc:
        raise FormatError(f"invalid frame content: {exc}", path) from exc


def frame_filename(frame_id: int) -> str:
    return f"{FRAMES_DIR}/{frame_id:06d}.bin"


@log_exception(logger)
def save_dataset(dataset: Dataset, directory: Union[str, Path]) -> Path:
    """
    Write the manifest and every frame file.

    Returns:
        Path of the written manifest
    """
    root = Path(directory)
    (root / FRAMES_DIR).mkdir(parents=True, exist_ok=True)
    entries = []
    for entry in dataset.manifest.entries:
        data = encode_frame(dataset.frames[entry.id])
        written = replace(entry, file=frame_filename(entry.id), sha256=sha256_bytes(data))
        (root / written.file).write_bytes(data)
        entries.append(written)

    body = replace(dataset.manifest, entries=entries).to_dict()
    body["manifest_hash"] = sha256_bytes(canonical_json(body).encode("utf-8"))
    manifest_path = root / MANIFEST_FILE
    manifest_path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Saved {len(dataset)} {dataset.manifest.domain.value} frames to {root}")
    return manifest_path


@log_exception(logger)
def load_dataset(directory: Union[str, Path]) -> Dataset:
    """
    Read and verify a dataset directory.

    Raises:
        FormatError: on missing, corrupt or version-mismatched files
        IntegrityError: if the manifest hash or a frame hash does not match
    """
    root = Path(directory)
    manifest_path = root / MANIFEST_FILE
    try:
        body = json.loads(read_bytes(manifest_path).decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}", manifest_path) from exc
    if not isinstance(body, dict):
        raise FormatError("manifest must be a JSON object", manifest_path)

    stored_hash = body.pop("manifest_hash", None)
    if stored_hash != sha256_bytes(canonical_json(body).encode("utf-8")):
        raise IntegrityError("manifest hash mismatch", manifest_path)
    if body.get("version") != config.MANIFEST_VERSION:
        raise FormatError(f"manifest version {body.get('version')} is not supported", manifest_path)
    try:
        manifest = DatasetManifest.from_dict(body)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed manifest: {exc}", manifest_path) from exc

    frames = {}
    for entry in manifest.entries:
        path = root / entry.file
        data = read_bytes(path)
        if sha256_bytes(data) != entry.sha256:
            raise IntegrityError("frame hash mismatch", path)
        frame = decode_frame(data, path)
        if frame.id != entry.id or frame.domain is not manifest.domain:
            raise FormatError(f"frame file holds id {frame.id} ({frame.domain.value})", path)
        frames[entry.id] = frame
    logger.info(f"Loaded {len(frames)} {manifest.domain.value} frames from {root}")
    return Dataset(manifest, frames)
