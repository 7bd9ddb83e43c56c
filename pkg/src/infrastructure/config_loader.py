"""
Experiment-config loader for UniDA3D

Reads a YAML experiment file, validates it into ExperimentConfig and names
the run directory.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import ValidationError

from config import config
from src.core.errors import ConfigError
from src.infrastructure.logger import get_logger
from src.models.task import ExperimentConfig

logger = get_logger(__name__)

DEFAULT_CONFIG = "benchmark.yaml"


def parse_config(data: Optional[Dict[str, Any]], source: str = "<dict>") -> ExperimentConfig:
    """
    Validate a mapping into an ExperimentConfig.

    Raises:
        ConfigError: on unknown keys, invalid values or a version mismatch
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"{source}: {problems}") from exc


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    Load an experiment file; the bundled benchmark config when path is None.

    Raises:
        ConfigError: if the file is missing, not YAML, or invalid
    """
    path = Path(path) if path is not None else config.config_path / DEFAULT_CONFIG
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    cfg = parse_config(data, str(path))
    logger.info(f"Loaded config {path} (hash {cfg.config_hash()[:12]})")
    return cfg


def run_dir_name(task: str, config_hash: str, seed: int) -> str:
    return f"{task}-{config_hash[:12]}-seed{seed}"


def run_directory(out: Union[str, Path], cfg: ExperimentConfig, seed: int) -> Path:
    """<out>/<task>-<hash[:12]>-seed<seed>"""
    return Path(out) / run_dir_name(cfg.task.task, cfg.config_hash(), seed)
