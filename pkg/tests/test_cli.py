"""
Unit tests for the command-line entry point and the self-test suite
"""

import io

import pytest

import main
from src.services.selftest import CHECKS, run_selftest

TINY_OVERRIDES = "{points_min: 64, points_max: 64, image_height: 8, image_width: 8, fx: 5.0, fy: 5.0}"


@pytest.fixture
def tiny_yaml(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(
        "version: 1\n"
        "data:\n"
        "  n_source: 2\n"
        "  n_target_train: 1\n"
        "  n_target_test: 1\n"
        f"  source_overrides: {TINY_OVERRIDES}\n"
        f"  target_overrides: {TINY_OVERRIDES}\n",
        encoding="utf-8",
    )
    return path


class TestSelftest:
    """Test suite for run_selftest"""

    def test_all_checks_pass(self):
        out = io.StringIO()
        assert run_selftest(seed=0, out=out)
        lines = out.getvalue().splitlines()
        assert len(lines) == len(CHECKS)
        assert all(line.startswith("PASS") for line in lines)


class TestMain:
    """Test suite for exit codes of main.main"""

    def test_selftest_command(self, capsys):
        assert main.main(["selftest"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_missing_config(self, tmp_path):
        assert main.main(["--config", str(tmp_path / "absent.yaml"), "run"]) == 2

    def test_eval_without_checkpoint(self, tiny_yaml, tmp_path):
        assert main.main(["--config", str(tiny_yaml), "--out", str(tmp_path / "runs"), "eval"]) == 4

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            main.main(["train-everything"])

    def test_gen_data(self, tiny_yaml, tmp_path):
        assert main.main(["--config", str(tiny_yaml), "--out", str(tmp_path / "data"), "gen-data"]) == 0
        assert (tmp_path / "data" / "source" / "manifest.json").exists()
        assert (tmp_path / "data" / "target" / "manifest.json").exists()
