"""
UniDA3D Application Configuration

Centralized constants for the engine. Experiment-level settings (datasets,
budgets, task regime) live in YAML files validated by
src/infrastructure/config_loader.py; this module only holds the fixed
defaults those files fall back to.
"""

from pathlib import Path
from dataclasses import dataclass


@dataclass(frozen=True)
class AppConfig:
    """Application configuration settings"""

    # Application metadata
    APP_NAME: str = "UniDA3D"
    VERSION: str = "0.1.0"

    # Directory paths (relative to project root)
    MAPPING_DIR: str = "data/class_mappings"
    CONFIG_DIR: str = "data/configs"

    # File format versions
    CONFIG_VERSION: int = 1
    FRAME_FORMAT_VERSION: int = 1
    MANIFEST_VERSION: int = 1
    CHECKPOINT_VERSION: int = 1
    REPORT_VERSION: int = 1

    # Model defaults
    FEATURE_DIM: int = 16          # F
    NUM_CLASSES: int = 6           # C
    DISC_HIDDEN: int = 32          # H
    CONV1_CHANNELS: int = 8
    MLP_HIDDEN: int = 16
    NORM_EPS: float = 1e-5
    IGNORE_LABEL: int = -1

    # Optimizer defaults (Adam + poly schedule)
    BASE_LR: float = 1e-3
    ADAM_BETA1: float = 0.9
    ADAM_BETA2: float = 0.999
    ADAM_EPS: float = 1e-8
    POLY_POWER: float = 0.9
    BATCH_SIZE: int = 8
    MAX_ITERATIONS: int = 2000

    # Discriminator
    BCE_CLAMP: float = 1e-7
    SOURCE_DOMAIN_LABEL: int = 0
    TARGET_DOMAIN_LABEL: int = 1

    # Pseudo-labeling
    PSEUDO_LABEL_QUANTILE: float = 0.2

    # Gradient check
    GRAD_CHECK_EPS: float = 1e-5
    GRAD_CHECK_FLOOR: float = 1e-5

    # Logging settings
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE: str = "run.log"

    @property
    def project_root(self) -> Path:
        """Get the project root directory"""
        return Path(__file__).parent

    @property
    def mapping_path(self) -> Path:
        """Get the bundled class-mapping directory"""
        return self.project_root / self.MAPPING_DIR

    @property
    def config_path(self) -> Path:
        """Get the bundled experiment-config directory"""
        return self.project_root / self.CONFIG_DIR


# Global configuration instance
config = AppConfig()
