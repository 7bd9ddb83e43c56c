"""
Unit tests for report and selection files

Tests report output including:
- Deterministic report.json / results.csv / selections.csv
- Report reload
- Selection CSV round trip and validation
"""

import numpy as np
import pytest

from src.core.errors import FormatError
from src.core.metrics import confusion, miou
from src.infrastructure.report_writer import (
    REPORT_FILE, RESULTS_FILE, SELECTIONS_FILE, emit_report, load_report, read_selection, write_selection,
)
from src.models.report import HEADS, EvaluationReport, HeadResult
from src.models.selection import ScoringStrategy, SelectionResult


@pytest.fixture
def selection():
    return SelectionResult(frame_ids=[12, 3, 7], scores=[0.91, 0.5, 0.5], budget=3, strategy=ScoringStrategy.CROSS_MODAL)


@pytest.fixture
def report(selection):
    cm = confusion(np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1]), 2)
    per_class, mean = miou(cm)
    heads = [HeadResult(head=h, per_class_iou=per_class, miou=mean, confusion=cm) for h in HEADS]
    return EvaluationReport(
        task="ada",
        seed=0,
        config_hash="ab" * 32,
        heads=heads,
        config={"task": {"task": "ada"}},
        frame_counts={"source_train": 8, "oracle": 3},
        selections={"target": selection.to_dict()},
        oracle_frame_ids=[12, 3, 7],
    )


class TestEmitReport:
    """Test suite for emit_report / load_report"""

    def test_files_written(self, report, tmp_path):
        paths = emit_report(report, tmp_path)
        assert sorted(p.name for p in paths) == sorted([REPORT_FILE, RESULTS_FILE, SELECTIONS_FILE])

    def test_selections_file_optional(self, report, tmp_path):
        paths = emit_report(report, tmp_path, write_selections=False)
        assert sorted(p.name for p in paths) == sorted([REPORT_FILE, RESULTS_FILE])
        assert not (tmp_path / SELECTIONS_FILE).exists()

    def test_byte_identical_re_emit(self, report, tmp_path):
        emit_report(report, tmp_path / "a")
        emit_report(load_report(tmp_path / "a"), tmp_path / "b")
        for name in (REPORT_FILE, RESULTS_FILE, SELECTIONS_FILE):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_results_rows(self, report, tmp_path):
        emit_report(report, tmp_path)
        lines = (tmp_path / RESULTS_FILE).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "head,miou,iou_0,iou_1"
        assert [line.split(",")[0] for line in lines[1:]] == list(HEADS)

    def test_reload(self, report, tmp_path):
        emit_report(report, tmp_path)
        loaded = load_report(tmp_path)
        assert loaded.config_hash == report.config_hash
        assert loaded.miou == pytest.approx({"2d": 7 / 12, "3d": 7 / 12, "fused": 7 / 12})
        assert loaded.oracle_frame_ids == [12, 3, 7]

    def test_selections_file(self, report, tmp_path):
        emit_report(report, tmp_path)
        lines = (tmp_path / SELECTIONS_FILE).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# version=1"
        assert lines[1] == "stage,frame_id,score,rank,strategy,budget"
        assert lines[2].startswith("target,12,0.91,1,cross_modal,3")

    def test_missing_report(self, tmp_path):
        with pytest.raises(FormatError):
            load_report(tmp_path)


class TestSelectionFile:
    """Test suite for write_selection / read_selection"""

    def test_round_trip(self, selection, tmp_path):
        path = write_selection(selection, tmp_path / "selection_target.csv")
        assert read_selection(path) == selection

    def test_missing_version_line(self, selection, tmp_path):
        path = write_selection(selection, tmp_path / "s.csv")
        path.write_text("\n".join(path.read_text(encoding="utf-8").splitlines()[1:]), encoding="utf-8")
        with pytest.raises(FormatError):
            read_selection(path)

    def test_mixed_strategies(self, selection, tmp_path):
        path = write_selection(selection, tmp_path / "s.csv")
        text = path.read_text(encoding="utf-8").replace("3,cross_modal", "3,random", 1)
        path.write_text(text, encoding="utf-8")
        with pytest.raises(FormatError):
            read_selection(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            read_selection(tmp_path / "absent.csv")
