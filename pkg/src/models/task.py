"""
Experiment configuration models for UniDA3D

The YAML experiment file is validated into ExperimentConfig; TaskSpec is the
flattened view a task run consumes.
"""

import hashlib
import json
from enum import Enum
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import config
from src.core.errors import ArgumentError, ConfigError
from src.models.dataset import SPLIT_TEST, SPLITS
from src.models.selection import Budget, ScoringStrategy

BudgetValue = Union[int, float, str]


class TaskType(Enum):
    """Adaptation regime"""
    UDA = "uda"
    UFDA = "ufda"
    ADA = "ada"

    @classmethod
    def from_string(cls, value: str) -> "TaskType":
        for task in cls:
            if task.value == value.lower():
                return task
        raise ArgumentError(f"unknown task {value!r}")


class SelfTraining(Enum):
    """Target self-training mode: none, pseudo-label all frames, or only selected ones"""
    NONE = "none"
    PL = "pl"
    APL = "apl"

    @classmethod
    def from_string(cls, value: str) -> "SelfTraining":
        for mode in cls:
            if mode.value == value.lower():
                return mode
        raise ArgumentError(f"unknown self-training mode {value!r}")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _check_budget(value: BudgetValue) -> BudgetValue:
    try:
        Budget.parse(value)
    except (ArgumentError, ValueError) as exc:
        raise ValueError(str(exc)) from exc
    return value


class DataConfig(_Section):
    source_preset: str = "source_default"
    target_preset: str = "target_default"
    source_overrides: Dict[str, Any] = Field(default_factory=dict)
    target_overrides: Dict[str, Any] = Field(default_factory=dict)
    n_source: int = Field(60, ge=1)
    n_target_train: int = Field(40, ge=1)
    n_target_test: int = Field(20, ge=1)
    overlap: float = Field(0.3, ge=0.0, le=1.0)
    dataset_dir: Optional[str] = None


class ModelConfig(_Section):
    feature_dim: int = Field(config.FEATURE_DIM, ge=1)
    num_classes: int = Field(config.NUM_CLASSES, ge=2)
    conv1_channels: int = Field(config.CONV1_CHANNELS, ge=1)
    mlp_hidden: int = Field(config.MLP_HIDDEN, ge=1)
    interaction: str = "symmetric"
    fusion_mode: str = "multiply"
    attention: str = "literal"
    coordinate_scale: float = Field(10.0, gt=0.0)

    @field_validator("interaction")
    @classmethod
    def _interaction(cls, v: str) -> str:
        if v not in ("symmetric", "two_d_to_three_d", "three_d_to_two_d", "none"):
            raise ValueError(f"unknown interaction variant {v!r}")
        return v

    @field_validator("fusion_mode")
    @classmethod
    def _fusion(cls, v: str) -> str:
        if v not in ("multiply", "add"):
            raise ValueError(f"unknown fusion mode {v!r}")
        return v

    @field_validator("attention")
    @classmethod
    def _attention(cls, v: str) -> str:
        if v not in ("literal", "conventional"):
            raise ValueError(f"unknown attention mode {v!r}")
        return v


class DiscriminatorConfig(_Section):
    hidden: int = Field(config.DISC_HIDDEN, ge=1)
    iterations: int = Field(500, ge=1)
    batch_size: int = Field(config.BATCH_SIZE, ge=1)
    lr: float = Field(config.BASE_LR, gt=0.0)
    max_points: int = Field(128, ge=1)


class SamplingConfig(_Section):
    strategy: str = "cross_modal"
    source_budget: BudgetValue = 0.5
    target_budget: BudgetValue = "5%"

    @field_validator("strategy")
    @classmethod
    def _strategy(cls, v: str) -> str:
        ScoringStrategy.from_string(v)
        return v

    @field_validator("source_budget", "target_budget")
    @classmethod
    def _budget(cls, v: BudgetValue) -> BudgetValue:
        return _check_budget(v)


class TaskConfig(_Section):
    task: str = "uda"
    target_fraction: float = Field(1.0, gt=0.0, le=1.0)
    source_sampling: bool = True
    self_training: str = "apl"
    fusion: bool = True
    pseudo_label_quantile: float = Field(config.PSEUDO_LABEL_QUANTILE, ge=0.0, le=1.0)

    @field_validator("task")
    @classmethod
    def _task(cls, v: str) -> str:
        TaskType.from_string(v)
        return v.lower()

    @field_validator("self_training")
    @classmethod
    def _self_training(cls, v: str) -> str:
        SelfTraining.from_string(v)
        return v.lower()


class TrainConfig(_Section):
    """
    Optimisation settings shared by the segmentation stages.

    source_iterations trains on full S; finetune_iterations re-trains on the
    sampled source subset; self_train_iterations runs the joint S/T stage.
    """
    batch_size: int = Field(config.BATCH_SIZE, ge=1)
    lr: float = Field(config.BASE_LR, gt=0.0)
    beta1: float = Field(config.ADAM_BETA1, ge=0.0, lt=1.0)
    beta2: float = Field(config.ADAM_BETA2, ge=0.0, lt=1.0)
    poly_power: float = Field(config.POLY_POWER, ge=0.0)
    source_iterations: int = Field(config.MAX_ITERATIONS, ge=1)
    finetune_iterations: int = Field(config.MAX_ITERATIONS // 2, ge=1)
    self_train_iterations: int = Field(config.MAX_ITERATIONS // 2, ge=1)
    max_points: int = Field(128, ge=1)
    loss_weight_2d: float = Field(1.0, ge=0.0)
    loss_weight_3d: float = Field(1.0, ge=0.0)
    log_every: int = Field(100, ge=1)


class EvalConfig(_Section):
    """Target split the heads are scored on, and whether selection files are written"""
    split: str = SPLIT_TEST
    write_selections: bool = True

    @field_validator("split")
    @classmethod
    def _split(cls, v: str) -> str:
        if v not in SPLITS:
            raise ValueError(f"unknown split {v!r}, expected one of {SPLITS}")
        return v


class ExperimentConfig(_Section):
    """Validated experiment file"""
    version: int = config.CONFIG_VERSION
    data: DataConfig = Field(default_factory=DataConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    discriminator: DiscriminatorConfig = Field(default_factory=DiscriminatorConfig)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)
    task: TaskConfig = Field(default_factory=TaskConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @field_validator("version")
    @classmethod
    def _version(cls, v: int) -> int:
        if v != config.CONFIG_VERSION:
            raise ValueError(f"config version {v} is not supported (expected {config.CONFIG_VERSION})")
        return v

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump"""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(self, **sections: Dict[str, Any]) -> "ExperimentConfig":
        """Copy with some section fields replaced, re-validated"""
        data = self.to_dict()
        for name, values in sections.items():
            data[name] = {**data[name], **values}
        return ExperimentConfig.model_validate(data)

    def task_spec(self, seed: int) -> "TaskSpec":
        return TaskSpec.from_config(self, seed)


class TaskSpec(BaseModel):
    """
    What a task run does.

    Attributes:
        task: UDA / UFDA / ADA
        target_fraction: p, share of target train frames visible to the
            discriminator (UFDA)
        source_budget: B_s
        target_budget: B_t (ADA)
        strategy: scoring strategy for both samplers
        source_sampling: whether to re-train on the sampled source subset
        self_training: none / pl / apl
        fusion: pseudo-label confidence from fused (on) or 3D-only (off) predictions
        pseudo_label_quantile: per-class confidence quantile q
        seed: master seed
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    task: TaskType
    target_fraction: float = 1.0
    source_budget: Budget = Budget.fraction(0.5)
    target_budget: Budget = Budget.fraction(0.05)
    strategy: ScoringStrategy = ScoringStrategy.CROSS_MODAL
    source_sampling: bool = True
    self_training: SelfTraining = SelfTraining.APL
    fusion: bool = True
    pseudo_label_quantile: float = config.PSEUDO_LABEL_QUANTILE
    seed: int = 0

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, seed: int) -> "TaskSpec":
        spec = cls(
            task=TaskType.from_string(cfg.task.task),
            target_fraction=cfg.task.target_fraction,
            source_budget=Budget.parse(cfg.sampling.source_budget),
            target_budget=Budget.parse(cfg.sampling.target_budget),
            strategy=ScoringStrategy.from_string(cfg.sampling.strategy),
            source_sampling=cfg.task.source_sampling,
            self_training=SelfTraining.from_string(cfg.task.self_training),
            fusion=cfg.task.fusion,
            pseudo_label_quantile=cfg.task.pseudo_label_quantile,
            seed=seed,
        )
        spec.check()
        return spec

    def check(self, n_target_train: Optional[int] = None) -> None:
        """
        Validate the combination of fields.

        Raises:
            ConfigError: on an invalid combination
        """
        if not 0.0 < self.target_fraction <= 1.0:
            raise ConfigError(f"target fraction must lie in (0, 1], got {self.target_fraction}")
        if self.task is not TaskType.UFDA and self.target_fraction != 1.0:
            raise ConfigError("target_fraction below 1 is only meaningful for UFDA")
        if self.task is TaskType.ADA and n_target_train is not None:
            try:
                self.target_budget.resolve(n_target_train)
            except ArgumentError as exc:
                raise ConfigError(f"target budget: {exc}") from exc
