"""
End-to-end tests for the staged adaptation pipeline

Tests the task runner including:
- Per-stage seed derivation
- ADA oracle selection size and disjoint pseudo-labeled frames
- UFDA with the full target fraction reproducing UDA
- Checkpoint restore and selection files
"""

import numpy as np
import pytest

from src.core.errors import ConfigError, StateError
from src.infrastructure.config_loader import load_config, run_directory
from src.infrastructure.report_writer import REPORT_FILE, load_report
from src.models.selection import ScoringStrategy, SelectionResult
from src.services.task_runner import STAGES, RunState, TaskRunner, build_datasets, build_model, run_task, stage_seeds


@pytest.fixture
def datasets(tiny_config):
    return build_datasets(tiny_config, seed=0)


def _runner(cfg, datasets, run_dir=None, seed=0):
    return TaskRunner(cfg, cfg.task_spec(seed), datasets[0], datasets[1], run_dir)


class TestStageSeeds:
    """Test suite for stage_seeds"""

    def test_one_seed_per_stage(self):
        seeds = stage_seeds(0)
        assert list(seeds) == list(STAGES)
        assert len(set(seeds.values())) == len(STAGES)

    def test_deterministic(self):
        assert stage_seeds(5) == stage_seeds(5)
        assert stage_seeds(5) != stage_seeds(6)


class TestTaskRunnerSetup:
    """Test suite for runner construction and stage helpers"""

    def test_class_count_mismatch(self, tiny_config):
        cfg = tiny_config.with_overrides(model={"num_classes": 4})
        with pytest.raises(ConfigError):
            build_datasets(cfg, seed=0)

    def test_ada_budget_larger_than_target(self, tiny_config, datasets):
        cfg = tiny_config.with_overrides(task={"task": "ada"}, sampling={"target_budget": 50})
        with pytest.raises(ConfigError):
            _runner(cfg, datasets)

    def test_ufda_fraction_sorted_subset(self, tiny_config, datasets):
        cfg = tiny_config.with_overrides(task={"task": "ufda", "target_fraction": 0.5})
        frames = _runner(cfg, datasets).discriminator_targets()
        ids = [f.id for f in frames]
        assert len(ids) == 3
        assert ids == sorted(ids)
        assert ids == [f.id for f in _runner(cfg, datasets).discriminator_targets()]

    def test_discriminator_not_needed(self, tiny_config, datasets):
        cfg = tiny_config.with_overrides(task={"source_sampling": False, "self_training": "pl"})
        assert not _runner(cfg, datasets).needs_discriminator()
        assert _runner(tiny_config, datasets).needs_discriminator()

    def test_restore_without_checkpoint(self, tiny_config, datasets, tmp_path):
        with pytest.raises(StateError):
            _runner(tiny_config, datasets, tmp_path).restore()

    def test_restore_needs_run_dir(self, tiny_config, datasets):
        with pytest.raises(StateError):
            _runner(tiny_config, datasets).restore()

    def test_evaluates_configured_split(self, tiny_config, datasets):
        cfg = tiny_config.with_overrides(eval={"split": "train"})
        runner = _runner(cfg, datasets)
        report = runner.evaluate(RunState(model=build_model(cfg, 0)))
        assert report.frame_counts == {"target_train": len(datasets[1].split("train"))}

        default = _runner(tiny_config, datasets).evaluate(RunState(model=build_model(tiny_config, 0)))
        assert default.frame_counts == {"target_test": len(datasets[1].split("test"))}

    def test_selection_files_disabled(self, tiny_config, datasets, tmp_path):
        cfg = tiny_config.with_overrides(eval={"write_selections": False})
        runner = _runner(cfg, datasets, tmp_path)
        state = RunState(model=build_model(cfg, 0))
        state.selections["source"] = SelectionResult(frame_ids=[1, 0], scores=[0.9, 0.4], strategy=ScoringStrategy.RANDOM, budget=2)
        assert runner.save_selections(state) == []
        assert not list(tmp_path.glob("selection_*.csv"))

        written = _runner(tiny_config, datasets, tmp_path).save_selections(state)
        assert [p.name for p in written] == ["selection_source.csv"]


@pytest.mark.slow
class TestPipeline:
    """Full runs on the tiny generated benchmark"""

    def test_ada_oracle_budget(self, tiny_config, datasets):
        cfg = tiny_config.with_overrides(task={"task": "ada"})
        report, state = _runner(cfg, datasets).run()
        assert len(report.oracle_frame_ids) == 2
        assert report.frame_counts["oracle"] == 2
        assert set(report.oracle_frame_ids) <= {f.id for f in datasets[1].split("train")}
        assert not {p.frame_id for p in state.pseudo} & set(report.oracle_frame_ids)
        assert len(report.selections["source"]["frame_ids"]) == 4

    def test_ada_random_strategy_without_self_training(self, tiny_config, datasets):
        cfg = tiny_config.with_overrides(
            task={"task": "ada", "self_training": "none", "source_sampling": False},
            sampling={"strategy": "random"},
        )
        report, state = _runner(cfg, datasets).run()
        assert state.model.trained_discriminators == set()
        assert report.frame_counts["self_train_target"] == 2

    def test_ufda_full_fraction_matches_uda(self, tiny_config, datasets):
        uda, _ = _runner(tiny_config, datasets).run(build_model(tiny_config, 0))
        cfg = tiny_config.with_overrides(task={"task": "ufda", "target_fraction": 1.0})
        ufda, _ = _runner(cfg, datasets).run(build_model(cfg, 0))
        assert [h.to_dict() for h in ufda.heads] == [h.to_dict() for h in uda.heads]
        assert ufda.selections == uda.selections
        assert ufda.frame_counts == uda.frame_counts

    def test_seeded_runs_repeat(self, tiny_config, datasets):
        first, _ = _runner(tiny_config, datasets).run()
        second, _ = _runner(tiny_config, datasets).run()
        assert first.to_dict() == second.to_dict()

    def test_run_dir_outputs_and_restore(self, tiny_config, tmp_path):
        cfg = tiny_config.with_overrides(task={"task": "ada"})
        run_dir = run_directory(tmp_path, cfg, 0)
        datasets = build_datasets(cfg, 0)
        report = run_task(cfg.task_spec(0), datasets, cfg, run_dir)

        assert (run_dir / REPORT_FILE).exists()
        assert (run_dir / "run.log").exists()
        assert load_report(run_dir).to_dict() == report.to_dict()
        for stage in ("source", "discriminator", "finetune", "adapted"):
            assert (run_dir / "checkpoints" / f"{stage}.ckpt").exists()

        runner = _runner(cfg, datasets, run_dir)
        state = runner.restore()
        assert state.oracle_ids == report.oracle_frame_ids
        assert runner.evaluate(state).miou == report.miou

    def test_stagewise_matches_full_run(self, tiny_config, datasets, tmp_path):
        full, _ = _runner(tiny_config, datasets).run()

        runner = _runner(tiny_config, datasets, tmp_path)
        runner.train_source(RunState(model=build_model(tiny_config, 0)))
        state = runner.restore("source")
        runner.train_discriminators(state)
        state = runner.restore("discriminator")
        runner.sample(state)
        runner.save_selections(state)
        state = runner.restore("discriminator")
        runner.finetune(state)
        runner.adapt(state)
        assert runner.evaluate(runner.restore()).miou == full.miou

    def test_repeated_run_writes_identical_files(self, tiny_config, datasets, tmp_path):
        for name in ("a", "b"):
            run_task(tiny_config.task_spec(0), datasets, tiny_config, tmp_path / name)
        written = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        compared = [p for p in written if p.name not in ("run.log", "timings.json")]
        assert any(p.suffix == ".ckpt" for p in compared)
        for rel in compared:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel


BENCHMARK_SEEDS = (0, 1, 2, 3, 4)
REGIMES = {
    "source_only": {"task": "uda", "source_sampling": False, "self_training": "none"},
    "source_sampling": {"task": "uda", "source_sampling": True, "self_training": "none"},
    "ada": {"task": "ada", "source_sampling": True},
}


@pytest.fixture(scope="module")
def benchmark_fused_miou():
    """Fused target-test mIoU per regime, one entry per seed"""
    base = load_config().with_overrides(sampling={"target_budget": "5%"})
    results = {}
    for name, task in REGIMES.items():
        cfg = base.with_overrides(task=task)
        results[name] = [
            run_task(cfg.task_spec(seed), build_datasets(cfg, seed), cfg).miou["fused"]
            for seed in BENCHMARK_SEEDS
        ]
    return results


@pytest.mark.slow
class TestBenchmarkOrdering:
    """Source only, source sampling and ADA on the bundled benchmark"""

    def test_regimes_ordered(self, benchmark_fused_miou):
        ordered = [
            a < b < c for a, b, c in zip(
                benchmark_fused_miou["source_only"], benchmark_fused_miou["source_sampling"], benchmark_fused_miou["ada"]
            )
        ]
        assert sum(ordered) >= 4, benchmark_fused_miou

    def test_source_sampling_gain(self, benchmark_fused_miou):
        gain = np.mean(benchmark_fused_miou["source_sampling"]) - np.mean(benchmark_fused_miou["source_only"])
        assert gain * 100.0 >= 2.0
