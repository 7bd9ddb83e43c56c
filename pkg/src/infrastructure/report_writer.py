"""
Report emission for UniDA3D

Files written into a run directory:
    report.json      full EvaluationReport, stable key order
    results.csv      one row per head: head, miou, per-class IoU
    selections.csv   one row per selected frame of every selection stage
    timings.json     wall-clock seconds per stage (kept apart so the other
                     files stay byte-reproducible)
"""

import csv
import io
import json
from pathlib import Path
from typing import Dict, List, Union

from config import config
from src.core.errors import FormatError
from src.infrastructure.logger import get_logger, log_exception
from src.models.report import EvaluationReport
from src.models.selection import ScoringStrategy, SelectionResult

logger = get_logger(__name__)

REPORT_FILE = "report.json"
RESULTS_FILE = "results.csv"
SELECTIONS_FILE = "selections.csv"
TIMINGS_FILE = "timings.json"
SELECTION_COLUMNS = ["frame_id", "score", "rank", "strategy", "budget"]


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def results_csv(report: EvaluationReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    num_classes = len(report.heads[0].per_class_iou) if report.heads else 0
    writer.writerow(["head", "miou"] + [f"iou_{c}" for c in range(num_classes)])
    for head in report.heads:
        writer.writerow([head.head, _fmt(head.miou)] + [_fmt(v) for v in head.per_class_iou])
    return buffer.getvalue()


def _selection_rows(selection: SelectionResult) -> List[List[str]]:
    return [
        [str(frame_id), _fmt(score), str(rank), selection.strategy.value, str(selection.budget)]
        for rank, (frame_id, score) in enumerate(zip(selection.frame_ids, selection.scores), start=1)
    ]


def selections_csv(report: EvaluationReport) -> str:
    buffer = io.StringIO()
    buffer.write(f"# version={config.REPORT_VERSION}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["stage"] + SELECTION_COLUMNS)
    for stage in sorted(report.selections):
        selection = SelectionResult.from_dict(report.selections[stage])
        for row in _selection_rows(selection):
            writer.writerow([stage] + row)
    return buffer.getvalue()


@log_exception(logger)
def emit_report(
    report: EvaluationReport, directory: Union[str, Path], write_selections: bool = True
) -> List[Path]:
    """
    Write report.json, results.csv and, unless disabled, selections.csv.

    Returns:
        Paths of the written files
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    files = {
        REPORT_FILE: json.dumps(report.to_dict(), indent=2) + "\n",
        RESULTS_FILE: results_csv(report),
    }
    if write_selections:
        files[SELECTIONS_FILE] = selections_csv(report)
    written = []
    for name, text in files.items():
        _write_text(root / name, text)
        written.append(root / name)
    logger.info(f"Report written to {root}")
    return written


def write_timings(timings: Dict[str, float], directory: Union[str, Path]) -> Path:
    path = Path(directory) / TIMINGS_FILE
    _write_text(path, json.dumps({k: round(v, 3) for k, v in timings.items()}, indent=2) + "\n")
    return path


def load_report(directory: Union[str, Path]) -> EvaluationReport:
    """
    Raises:
        FormatError: if report.json is missing or malformed
    """
    path = Path(directory) / REPORT_FILE
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return EvaluationReport.from_dict(data)
    except FileNotFoundError as exc:
        raise FormatError("report not found", path) from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed report: {exc}", path) from exc


def write_selection(selection: SelectionResult, path: Union[str, Path]) -> Path:
    """Single selection as CSV with a leading '# version=1' line"""
    buffer = io.StringIO()
    buffer.write(f"# version={config.REPORT_VERSION}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SELECTION_COLUMNS)
    writer.writerows(_selection_rows(selection))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_text(path, buffer.getvalue())
    return path


def read_selection(path: Union[str, Path]) -> SelectionResult:
    """
    Raises:
        FormatError: on a missing file, version mismatch or malformed rows
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise FormatError("selection file not found", path) from exc
    if not lines or lines[0].strip() != f"# version={config.REPORT_VERSION}":
        raise FormatError("missing or unsupported version line", path)
    rows = list(csv.reader(lines[1:]))
    if not rows or rows[0] != SELECTION_COLUMNS:
        raise FormatError(f"expected columns {','.join(SELECTION_COLUMNS)}", path)
    try:
        body = sorted(rows[1:], key=lambda r: int(r[2]))
        strategies = {r[3] for r in body}
        budgets = {int(r[4]) for r in body}
        if len(strategies) > 1 or len(budgets) > 1:
            raise ValueError("rows disagree on strategy or budget")
        return SelectionResult(
            frame_ids=[int(r[0]) for r in body],
            scores=[float(r[1]) for r in body],
            budget=budgets.pop() if budgets else 0,
            strategy=ScoringStrategy.from_string(strategies.pop()) if strategies else ScoringStrategy.CROSS_MODAL,
        )
    except (IndexError, ValueError) as exc:
        raise FormatError(f"malformed selection row: {exc}", path) from exc
