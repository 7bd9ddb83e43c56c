"""
Task Runner Service

Runs the staged UDA / UFDA / ADA recipe:
    1. supervised training on the full source set
    2. discriminator training (UFDA: on a seeded p-fraction of the target set)
    3. source sampling with budget B_s
    4. fine-tuning on the sampled source frames
    5. target adaptation: PL / APL self-training, or for ADA an oracle-labeled
       target selection plus optional PL / APL on the remaining frames
    6. evaluation of the 2D, 3D and fused heads on the target split named by eval.split (test by default)

Every stage draws from its own RNG stream spawned from the master seed.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.core.errors import ArgumentError, ConfigError, StateError
from src.core.interaction import AttentionMode, FusionMode, InteractionVariant
from src.core.network import UniDAModel
from src.core.synthetic import generate_domain_pair
from src.infrastructure.checkpoint import CHECKPOINT_DIR, load_checkpoint, save_checkpoint
from src.infrastructure.dataset_store import load_dataset
from src.infrastructure.logger import Logger, get_logger, log_exception
from src.infrastructure.report_writer import emit_report, read_selection, write_selection, write_timings
from src.models.dataset import SPLIT_TEST, SPLIT_TRAIN, Dataset
from src.models.domain_spec import preset
from src.models.frame import Frame
from src.models.params import ModelParams
from src.models.pseudo_label import PseudoLabeledFrame
from src.models.report import EvaluationReport
from src.models.selection import Budget, SelectionResult
from src.models.task import ExperimentConfig, SelfTraining, TaskSpec, TaskType
from src.services.discriminator_trainer import DiscriminatorTrainer, FeatureCache
from src.services.evaluator import evaluate_model
from src.services.pseudo_labeler import PseudoLabeler
from src.services.sampler import REQUIRED_SLOTS, sample_source, sample_target
from src.services.source_trainer import SegmentationTrainer

logger = get_logger(__name__)

STAGES = ("data", "init", "source", "disc", "ufda", "sample", "finetune", "self_train")
CHECKPOINT_ORDER = ("adapted", "finetune", "discriminator", "source")
SELECTION_STAGES = ("source", "target", "apl")


def stage_seeds(seed: int) -> Dict[str, int]:
    """One independent seed per stage, spawned from the master seed"""
    children = np.random.SeedSequence(seed).spawn(len(STAGES))
    return {name: int(child.generate_state(1)[0]) for name, child in zip(STAGES, children)}


def build_datasets(cfg: ExperimentConfig, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Load the configured dataset directory, or generate the domain pair.

    Raises:
        ConfigError: if the class count disagrees with the model config
    """
    if cfg.data.dataset_dir:
        root = Path(cfg.data.dataset_dir)
        source, target = load_dataset(root / "source"), load_dataset(root / "target")
    else:
        source_spec = preset(cfg.data.source_preset)
        target_spec = preset(cfg.data.target_preset)
        if cfg.data.source_overrides:
            source_spec = source_spec.shifted(**cfg.data.source_overrides)
        if cfg.data.target_overrides:
            target_spec = target_spec.shifted(**cfg.data.target_overrides)
        if source_spec.num_classes != cfg.model.num_classes:
            raise ConfigError(
                f"model.num_classes is {cfg.model.num_classes} but the domains define "
                f"{source_spec.num_classes} classes"
            )
        source, target = generate_domain_pair(
            source_spec,
            target_spec,
            (cfg.data.n_source, cfg.data.n_target_train, cfg.data.n_target_test),
            cfg.data.overlap,
            stage_seeds(seed)["data"],
        )
    return source, target


def build_model(cfg: ExperimentConfig, seed: int) -> UniDAModel:
    """Freshly initialised network for the configured architecture"""
    params = ModelParams.init(
        np.random.default_rng(stage_seeds(seed)["init"]),
        feature_dim=cfg.model.feature_dim,
        num_classes=cfg.model.num_classes,
        disc_hidden=cfg.discriminator.hidden,
        conv1_channels=cfg.model.conv1_channels,
        mlp_hidden=cfg.model.mlp_hidden,
    )
    return UniDAModel(
        params,
        variant=InteractionVariant.from_string(cfg.model.interaction),
        fusion_mode=FusionMode.from_string(cfg.model.fusion_mode),
        attention=AttentionMode.from_string(cfg.model.attention),
        coordinate_scale=cfg.model.coordinate_scale,
    )


@dataclass
class RunState:
    """Intermediate results shared between stages"""
    model: UniDAModel
    cache: Optional[FeatureCache] = None
    disc_target_ids: List[int] = field(default_factory=list)
    selections: Dict[str, SelectionResult] = field(default_factory=dict)
    oracle_ids: List[int] = field(default_factory=list)
    pseudo: List[PseudoLabeledFrame] = field(default_factory=list)
    frame_counts: Dict[str, int] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)


class TaskRunner:
    """
    Service executing one TaskSpec against a source / target dataset pair.

    Handles:
    - Stage ordering and per-stage seeds
    - Checkpoints per stage when a run directory is given
    - Report assembly and emission
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        spec: TaskSpec,
        source: Dataset,
        target: Dataset,
        run_dir: Optional[Union[str, Path]] = None,
    ):
        """
        Initialize task runner.

        Raises:
            ConfigError: on an invalid spec / dataset combination
        """
        self.cfg = cfg
        self.spec = spec
        self.source = source
        self.target = target
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.seeds = stage_seeds(spec.seed)
        self.source_train = source.split(SPLIT_TRAIN)
        self.target_train = target.split(SPLIT_TRAIN)
        self.target_test = target.split(SPLIT_TEST)
        self.eval_frames = target.split(cfg.eval.split)
        if not self.source_train or not self.target_train:
            raise ConfigError("both domains need training frames")
        if not self.target_test:
            raise ConfigError("the target dataset has no test split")
        if not self.eval_frames:
            raise ConfigError(f"the target dataset has no {cfg.eval.split} frames to evaluate")
        spec.check(len(self.target_train))

    # ========== Helpers ==========

    def _checkpoint(self, state: RunState, stage: str) -> None:
        if self.run_dir is not None:
            save_checkpoint(state.model, self.run_dir, stage)

    def _timed(self, state: RunState, stage: str, start: float) -> None:
        state.timings[stage] = time.perf_counter() - start

    def _trainer(self, state: RunState) -> SegmentationTrainer:
        return SegmentationTrainer(state.model, self.cfg.train)

    def _target_by_id(self) -> Dict[int, Frame]:
        return {f.id: f for f in self.target_train}

    # ========== Stages ==========

    def train_source(self, state: RunState) -> None:
        start = time.perf_counter()
        self._trainer(state).train_source(
            self.source_train, self.cfg.train.source_iterations, self.seeds["source"], stage="source"
        )
        state.frame_counts["source_train"] = len(self.source_train)
        self._checkpoint(state, "source")
        self._timed(state, "source", start)

    def discriminator_targets(self) -> List[Frame]:
        """Target frames visible to the discriminator: all, or a seeded p-fraction for UFDA"""
        if self.spec.task is not TaskType.UFDA:
            return list(self.target_train)
        n = Budget.fraction(self.spec.target_fraction).resolve(len(self.target_train))
        rng = np.random.default_rng(self.seeds["ufda"])
        ids = [f.id for f in self.target_train]
        chosen = sorted(int(i) for i in rng.permutation(ids)[:n])
        by_id = self._target_by_id()
        return [by_id[i] for i in chosen]

    def needs_discriminator(self) -> bool:
        """Whether any later stage scores frames"""
        return (
            self.spec.source_sampling
            or self.spec.task is TaskType.ADA
            or self.spec.self_training is SelfTraining.APL
        )

    def train_discriminators(self, state: RunState) -> None:
        start = time.perf_counter()
        disc_targets = self.discriminator_targets()
        state.disc_target_ids = [f.id for f in disc_targets]
        state.cache = FeatureCache(state.model, self.cfg.discriminator.max_points, self.seeds["disc"])
        state.cache.warm(self.source_train + self.target_train)
        trainer = DiscriminatorTrainer(state.model, self.cfg.discriminator, state.cache)
        for slot in REQUIRED_SLOTS[self.spec.strategy]:
            trainer.train(self.source_train, disc_targets, slot, seed=self.seeds["disc"])
        state.frame_counts["disc_target"] = len(disc_targets)
        self._checkpoint(state, "discriminator")
        self._timed(state, "discriminator", start)

    def sample(self, state: RunState) -> None:
        start = time.perf_counter()
        if self.spec.source_sampling:
            state.selections["source"] = sample_source(
                self.source_train, state.model, self.spec.source_budget,
                self.spec.strategy, state.cache, self.seeds["sample"],
            )
            state.frame_counts["source_selected"] = len(state.selections["source"])
        if self.spec.task is TaskType.ADA:
            selection = sample_target(
                self.target_train, state.model, self.spec.target_budget,
                self.spec.strategy, state.cache, self.seeds["sample"],
            )
            state.selections["target"] = selection
            state.oracle_ids = list(selection.frame_ids)
            state.frame_counts["oracle"] = len(selection)
        self._timed(state, "sample", start)

    def source_subset(self, state: RunState) -> List[Frame]:
        if "source" in state.selections:
            return self.source.subset(state.selections["source"].frame_ids)
        return list(self.source_train)

    def finetune(self, state: RunState) -> None:
        if "source" not in state.selections:
            return
        start = time.perf_counter()
        self._trainer(state).train_source(
            self.source_subset(state), self.cfg.train.finetune_iterations,
            self.seeds["finetune"], stage="finetune",
        )
        self._checkpoint(state, "finetune")
        self._timed(state, "finetune", start)

    def _pseudo_frames(self, state: RunState, pool: List[Frame]) -> List[Frame]:
        """PL or APL over `pool` as configured; empty for self_training none"""
        mode = self.spec.self_training
        if mode is SelfTraining.NONE or not pool:
            return []
        labeler = PseudoLabeler(state.model, self.spec.pseudo_label_quantile, self.spec.fusion)
        if mode is SelfTraining.PL:
            labeled = labeler.pseudo_label(pool)
        else:
            try:
                selection = sample_target(
                    pool, state.model, self.spec.target_budget,
                    self.spec.strategy, state.cache, self.seeds["sample"] + 1,
                )
            except ArgumentError as exc:
                logger.warning(f"APL selection skipped: {exc}")
                return []
            state.selections["apl"] = selection
            labeled = labeler.apl(pool, selection)
        state.pseudo = labeled
        state.frame_counts["pseudo_labeled"] = sum(1 for p in labeled if not p.empty)
        by_id = {f.id: f for f in pool}
        return [p.apply(by_id[p.frame_id]) for p in labeled if not p.empty]

    def adapt(self, state: RunState) -> None:
        start = time.perf_counter()
        by_id = self._target_by_id()
        if self.spec.task is TaskType.ADA:
            revealed = set(state.oracle_ids)
            oracle = [by_id[i] for i in state.oracle_ids]
            remaining = [f for f in self.target_train if f.id not in revealed]
            target_frames = oracle + self._pseudo_frames(state, remaining)
        else:
            pool = [by_id[i] for i in state.disc_target_ids] if state.disc_target_ids else self.discriminator_targets()
            target_frames = self._pseudo_frames(state, pool)

        if not target_frames:
            logger.info("No target frames for self-training; adaptation stage skipped")
            return
        self._trainer(state).self_train(
            self.source_subset(state), target_frames,
            self.cfg.train.self_train_iterations, self.seeds["self_train"],
        )
        state.frame_counts["self_train_target"] = len(target_frames)
        self._checkpoint(state, "adapted")
        self._timed(state, "adapt", start)

    def evaluate(self, state: RunState) -> EvaluationReport:
        start = time.perf_counter()
        heads = evaluate_model(state.model, self.eval_frames)
        state.frame_counts[f"target_{self.cfg.eval.split}"] = len(self.eval_frames)
        self._timed(state, "eval", start)
        return EvaluationReport(
            task=self.spec.task.value,
            seed=self.spec.seed,
            config_hash=self.cfg.config_hash(),
            heads=heads,
            config=self.cfg.to_dict(),
            frame_counts=dict(state.frame_counts),
            selections={k: v.to_dict() for k, v in state.selections.items()},
            oracle_frame_ids=list(state.oracle_ids),
        )

    # ========== Stage persistence ==========

    def _require_run_dir(self) -> Path:
        if self.run_dir is None:
            raise StateError("this operation needs a run directory")
        return self.run_dir

    def save_selections(self, state: RunState) -> List[Path]:
        """selection_<stage>.csv for every selection made so far; none when eval.write_selections is off"""
        run_dir = self._require_run_dir()
        if not self.cfg.eval.write_selections:
            logger.info("Selection files disabled by eval.write_selections")
            return []
        return [
            write_selection(selection, run_dir / f"selection_{name}.csv")
            for name, selection in sorted(state.selections.items())
        ]

    def restore(self, stage: Optional[str] = None) -> RunState:
        """
        Rebuild a run state from the run directory.

        Args:
            stage: checkpoint to load; the most advanced one when None

        Raises:
            StateError: if no matching checkpoint exists
        """
        ckpt_dir = self._require_run_dir() / CHECKPOINT_DIR
        candidates = [stage] if stage else list(CHECKPOINT_ORDER)
        path = next((ckpt_dir / f"{n}.ckpt" for n in candidates if (ckpt_dir / f"{n}.ckpt").exists()), None)
        if path is None:
            raise StateError(f"no {' / '.join(candidates)} checkpoint under {ckpt_dir}")

        state = RunState(model=load_checkpoint(path))
        logger.info(f"Restored {path.stem} checkpoint from {path}")
        if path.stem in ("source", "discriminator"):
            # features must come from the encoder the discriminators were trained on
            state.cache = FeatureCache(state.model, self.cfg.discriminator.max_points, self.seeds["disc"])
            state.cache.warm(self.source_train + self.target_train)
        state.disc_target_ids = [f.id for f in self.discriminator_targets()]
        state.frame_counts["source_train"] = len(self.source_train)
        state.frame_counts["disc_target"] = len(state.disc_target_ids)

        for name in SELECTION_STAGES:
            selection_path = self.run_dir / f"selection_{name}.csv"
            if selection_path.exists():
                state.selections[name] = read_selection(selection_path)
        if "source" in state.selections:
            state.frame_counts["source_selected"] = len(state.selections["source"])
        if "target" in state.selections:
            state.oracle_ids = list(state.selections["target"].frame_ids)
            state.frame_counts["oracle"] = len(state.oracle_ids)
        return state

    # ========== Pipeline ==========

    @log_exception(logger)
    def run(self, model: Optional[UniDAModel] = None) -> Tuple[EvaluationReport, RunState]:
        """
        Execute every stage and, with a run directory, write the report files.

        Returns:
            (report, final run state)
        """
        state = RunState(model=model or build_model(self.cfg, self.spec.seed))
        logger.info(
            f"Task {self.spec.task.value} seed {self.spec.seed}: "
            f"{len(self.source_train)} source / {len(self.target_train)} target train frames"
        )
        self.train_source(state)
        if self.needs_discriminator():
            self.train_discriminators(state)
        else:
            state.disc_target_ids = [f.id for f in self.discriminator_targets()]
        self.sample(state)
        self.finetune(state)
        self.adapt(state)
        report = self.evaluate(state)
        if self.run_dir is not None:
            self.save_selections(state)
            emit_report(report, self.run_dir, self.cfg.eval.write_selections)
            write_timings(state.timings, self.run_dir)
        return report, state


def run_task(
    spec: TaskSpec,
    datasets: Tuple[Dataset, Dataset],
    cfg: ExperimentConfig,
    run_dir: Optional[Union[str, Path]] = None,
) -> EvaluationReport:
    """
    Run the full pipeline for one task spec.

    Args:
        spec: task regime, budgets, strategy and seed
        datasets: (source, target) datasets
        cfg: experiment configuration
        run_dir: where checkpoints, report files and run.log go (optional)

    Raises:
        ConfigError: on an invalid spec combination
    """
    if run_dir is not None:
        Logger.attach_run_file(run_dir)
    try:
        report, _ = TaskRunner(cfg, spec, datasets[0], datasets[1], run_dir).run()
    finally:
        if run_dir is not None:
            Logger.detach_run_file()
    return report
