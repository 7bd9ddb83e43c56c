"""
UniDA3D - Command-line Entry Point

Cross-modal domain adaptation for 2D/3D semantic segmentation on synthetic
driving scenes: data generation, staged training, sampling, adaptation and
evaluation.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from config import config
from src.core.errors import ConfigError, UniDAError
from src.infrastructure.config_loader import load_config, run_directory
from src.infrastructure.dataset_store import save_dataset
from src.infrastructure.logger import Logger, get_logger
from src.infrastructure.report_writer import emit_report
from src.models.report import EvaluationReport
from src.models.task import ExperimentConfig
from src.services.selftest import run_selftest
from src.services.task_runner import RunState, TaskRunner, build_datasets, build_model, run_task

STAGE_COMMANDS = ("train-source", "train-disc", "sample", "adapt", "eval")


def setup_logging(log_level: str) -> None:
    """Setup application logging"""
    Logger.setup(log_level=log_level)
    Logger.set_level(log_level)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unida3d", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--config", type=Path, default=None, help="experiment YAML (default: bundled benchmark)")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", type=Path, default=Path("runs"), help="output root")
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    parser.add_argument("--version", action="version", version=f"{config.APP_NAME} {config.VERSION}")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", help="generate and store the source / target datasets under --out")
    sub.add_parser("train-source", help="supervised training on the full source set")
    sub.add_parser("train-disc", help="train the domain discriminator(s)")
    sub.add_parser("sample", help="select source (and, for ADA, target) frames")
    sub.add_parser("adapt", help="fine-tune on the source selection and self-train on the target")
    sub.add_parser("eval", help="evaluate the latest checkpoint and write the report")
    sub.add_parser("run", help="full pipeline for the configured task")
    sub.add_parser("selftest", help="run the invariant suite")
    return parser


def print_report(report: EvaluationReport) -> None:
    for head in report.heads:
        print(f"{head.head:>6}  mIoU {head.miou:.4f}")


def cmd_gen_data(cfg: ExperimentConfig, seed: int, out: Path) -> int:
    source, target = build_datasets(cfg, seed)
    for dataset, name in ((source, "source"), (target, "target")):
        manifest = save_dataset(dataset, out / name)
        print(f"{name}: {len(dataset)} frames -> {manifest}")
    return 0


def cmd_stage(command: str, cfg: ExperimentConfig, seed: int, out: Path) -> int:
    """One pipeline stage, resuming from the run directory's checkpoints"""
    run_dir = run_directory(out, cfg, seed)
    source, target = build_datasets(cfg, seed)
    runner = TaskRunner(cfg, cfg.task_spec(seed), source, target, run_dir)
    Logger.attach_run_file(run_dir)
    try:
        if command == "train-source":
            runner.train_source(RunState(model=build_model(cfg, seed)))
        elif command == "train-disc":
            runner.train_discriminators(runner.restore("source"))
        elif command == "sample":
            if not cfg.eval.write_selections:
                raise ConfigError(
                    "the sample stage hands its selections to adapt through files; set eval.write_selections: true"
                )
            state = runner.restore("discriminator")
            runner.sample(state)
            for path in runner.save_selections(state):
                print(path)
        elif command == "adapt":
            state = runner.restore("discriminator")
            runner.finetune(state)
            runner.adapt(state)
            runner.save_selections(state)
        elif command == "eval":
            report = runner.evaluate(runner.restore())
            emit_report(report, run_dir, cfg.eval.write_selections)
            print_report(report)
    finally:
        Logger.detach_run_file()
    print(f"run directory: {run_dir}")
    return 0


def cmd_run(cfg: ExperimentConfig, seed: int, out: Path) -> int:
    run_dir = run_directory(out, cfg, seed)
    report = run_task(cfg.task_spec(seed), build_datasets(cfg, seed), cfg, run_dir)
    print_report(report)
    print(f"run directory: {run_dir}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    logger = get_logger(__name__)
    logger.info(f"Starting {config.APP_NAME} v{config.VERSION}: {args.command}")

    try:
        if args.command == "selftest":
            return 0 if run_selftest(args.seed) else 4
        cfg = load_config(args.config)
        if args.command == "gen-data":
            return cmd_gen_data(cfg, args.seed, args.out)
        if args.command in STAGE_COMMANDS:
            return cmd_stage(args.command, cfg, args.seed, args.out)
        return cmd_run(cfg, args.seed, args.out)
    except UniDAError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return 1


if __name__ == "__main__":
    sys.exit(main())
