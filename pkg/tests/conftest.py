"""
Shared fixtures: tiny domain specs, a generated domain pair and small models
"""

import numpy as np
import pytest

from src.core.network import UniDAModel
from src.core.synthetic import generate_domain_pair
from src.models.domain_spec import source_default, target_default
from src.models.params import ModelParams
from src.models.task import ExperimentConfig

TINY = {
    "points_min": 96,
    "points_max": 128,
    "image_height": 16,
    "image_width": 16,
    "fx": 10.0,
    "fy": 10.0,
    "objects_min": 2,
    "objects_max": 4,
}


@pytest.fixture(scope="session")
def tiny_specs():
    return source_default().shifted(**TINY), target_default().shifted(**TINY)


@pytest.fixture(scope="session")
def tiny_pair(tiny_specs):
    """6 source frames (3 target-like), 4 target train and 3 target test frames"""
    return generate_domain_pair(tiny_specs[0], tiny_specs[1], (6, 4, 3), 0.5, seed=0)


@pytest.fixture
def make_model():
    def factory(seed: int = 0, **kwargs) -> UniDAModel:
        params = ModelParams.init(
            np.random.default_rng(seed), feature_dim=4, num_classes=6,
            disc_hidden=8, conv1_channels=4, mlp_hidden=8,
        )
        return UniDAModel(params, **kwargs)
    return factory


@pytest.fixture
def tiny_config():
    """Experiment config that trains in seconds"""
    return ExperimentConfig.model_validate({
        "data": {
            "source_overrides": TINY,
            "target_overrides": TINY,
            "n_source": 8,
            "n_target_train": 6,
            "n_target_test": 3,
            "overlap": 0.5,
        },
        "model": {"feature_dim": 4, "conv1_channels": 4, "mlp_hidden": 8},
        "discriminator": {"hidden": 8, "iterations": 5, "batch_size": 2, "max_points": 32},
        "sampling": {"source_budget": 0.5, "target_budget": 2},
        "train": {
            "batch_size": 2,
            "source_iterations": 4,
            "finetune_iterations": 2,
            "self_train_iterations": 2,
            "max_points": 32,
            "log_every": 2,
        },
    })
