"""
Target-budget sweep for active domain adaptation

Runs the ADA pipeline once per target budget (1%, 5%, 10%, 20% by default)
and seed, and writes one CSV row per run with the 2D / 3D / fused mIoU.

Usage:
    python scripts/budget_sweep.py --config data/configs/benchmark.yaml \
        --seeds 0 1 2 --out runs/sweep
"""
import argparse
import csv
import sys
from pathlib import Path
from typing import List

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.infrastructure.config_loader import load_config, run_directory  # noqa: E402
from src.infrastructure.logger import Logger  # noqa: E402
from src.services.task_runner import build_datasets, run_task  # noqa: E402

DEFAULT_BUDGETS = ["1%", "5%", "10%", "20%"]
COLUMNS = ["budget", "seed", "strategy", "miou_2d", "miou_3d", "miou_fused", "oracle_frames"]


def parse_args(argv: List[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="ADA target-budget sweep")
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--budgets", nargs="+", default=DEFAULT_BUDGETS)
    parser.add_argument("--seeds", nargs="+", type=int, default=[0])
    parser.add_argument("--strategy", default=None, help="override sampling.strategy")
    parser.add_argument("--out", type=Path, default=Path("runs") / "budget_sweep")
    return parser.parse_args(argv)


def main(argv: List[str] = None) -> int:
    """Run every (budget, seed) pair and write budget_sweep.csv"""
    args = parse_args(sys.argv[1:] if argv is None else argv)
    Logger.setup()
    base = load_config(args.config)
    sampling = {"strategy": args.strategy} if args.strategy else {}
    args.out.mkdir(parents=True, exist_ok=True)
    out_file = args.out / "budget_sweep.csv"

    rows = []
    for budget in args.budgets:
        cfg = base.with_overrides(task={"task": "ada", "target_fraction": 1.0},
                                  sampling={**sampling, "target_budget": budget})
        for seed in args.seeds:
            print(f"B_t={budget} seed={seed} ...")
            report = run_task(cfg.task_spec(seed), build_datasets(cfg, seed), cfg,
                              run_directory(args.out, cfg, seed))
            miou = {head.head: head.miou for head in report.heads}
            rows.append([
                budget, seed, cfg.sampling.strategy,
                repr(miou["2d"]), repr(miou["3d"]), repr(miou["fused"]),
                len(report.oracle_frame_ids),
            ])
            print(f"  fused mIoU {miou['fused']:.4f}")

    with open(out_file, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    print(f"✓ Saved to: {out_file}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
