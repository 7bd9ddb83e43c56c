"""
Model checkpoints for UniDA3D

Layout (little-endian):
    magic "UDCK" | u32 version | string stage | string metadata JSON |
    u32 count | count × (string name | u32 ndim | u32[ndim] shape | f8[...] values)

Records are written in sorted name order, so equal parameters give equal bytes.
"""

import json
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from config import config
from src.core.errors import FormatError
from src.core.interaction import AttentionMode, FusionMode, InteractionVariant
from src.core.network import UniDAModel
from src.infrastructure.binary_codec import Reader, join, pack_array, pack_string, pack_uint32, read_bytes
from src.infrastructure.logger import get_logger
from src.models.params import DISC_CROSS_MODAL, ModelParams

logger = get_logger(__name__)

CHECKPOINT_MAGIC = b"UDCK"
CHECKPOINT_DIR = "checkpoints"


def encode_checkpoint(state: Dict[str, np.ndarray], stage: str, metadata: Dict[str, Any]) -> bytes:
    parts = [
        CHECKPOINT_MAGIC,
        pack_uint32(config.CHECKPOINT_VERSION),
        pack_string(stage),
        pack_string(json.dumps(metadata, sort_keys=True, separators=(",", ":"))),
        pack_uint32(len(state)),
    ]
    for name in sorted(state):
        value = np.asarray(state[name], dtype=np.float64)
        parts.append(pack_string(name))
        parts.append(pack_uint32(value.ndim))
        parts.extend(pack_uint32(d) for d in value.shape)
        parts.append(pack_array(value, "<f8"))
    return join(parts)


def decode_checkpoint(data: bytes, path: Union[str, Path, None] = None) -> Tuple[str, Dict[str, Any], Dict[str, np.ndarray]]:
    """
    Parse checkpoint bytes into (stage, metadata, state).

    Raises:
        FormatError: on bad magic, version, truncation or malformed metadata
    """
    reader = Reader(data, path)
    reader.magic(CHECKPOINT_MAGIC)
    reader.version(config.CHECKPOINT_VERSION)
    stage = reader.string("stage")
    try:
        metadata = json.loads(reader.string("metadata"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"checkpoint metadata is not valid JSON: {exc}", path) from exc
    state = {}
    for _ in range(reader.uint32("record count")):
        name = reader.string("record name")
        ndim = reader.uint32(f"{name} ndim")
        shape = tuple(reader.uint32(f"{name} shape") for _ in range(ndim))
        state[name] = reader.array("<f8", shape, name)
    reader.finish()
    return stage, metadata, state


def model_metadata(model: UniDAModel) -> Dict[str, Any]:
    p = model.params
    return {
        **model.settings(),
        "feature_dim": p.feature_dim,
        "num_classes": p.num_classes,
        "conv1_channels": p.encoder2d.conv1.n_out,
        "mlp_hidden": p.encoder3d.fc1.n_out,
        "disc_hidden": p.discriminators[DISC_CROSS_MODAL].fc1.n_out,
        "trained_discriminators": sorted(model.trained_discriminators),
    }


def save_checkpoint(model: UniDAModel, run_dir: Union[str, Path], stage: str) -> Path:
    """Write <run_dir>/checkpoints/<stage>.ckpt"""
    path = Path(run_dir) / CHECKPOINT_DIR / f"{stage}.ckpt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(model.params.state_dict(), stage, model_metadata(model)))
    logger.info(f"Saved checkpoint {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> UniDAModel:
    """
    Rebuild a model from a checkpoint file.

    Raises:
        FormatError: on a corrupt file or missing metadata
    """
    stage, meta, state = decode_checkpoint(read_bytes(path), path)
    try:
        params = ModelParams.init(
            np.random.default_rng(0),
            feature_dim=meta["feature_dim"],
            num_classes=meta["num_classes"],
            disc_hidden=meta["disc_hidden"],
            conv1_channels=meta["conv1_channels"],
            mlp_hidden=meta["mlp_hidden"],
        )
        params.load_state_dict(state)
        model = UniDAModel(
            params,
            variant=InteractionVariant.from_string(meta["variant"]),
            fusion_mode=FusionMode.from_string(meta["fusion_mode"]),
            attention=AttentionMode.from_string(meta["attention"]),
            coordinate_scale=float(meta["coordinate_scale"]),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"checkpoint does not describe a model: {exc}", path) from exc
    model.trained_discriminators = set(meta.get("trained_discriminators", []))
    logger.info(f"Loaded checkpoint {path} (stage {stage})")
    return model
