import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from agentecon.cli import EXIT_ANALYSIS, EXIT_CHECKPOINT, EXIT_CONFIG, EXIT_OK, main


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump({"max_population": 20, "initial_households": 20, "phase1_steps": 3,
                                    "phase2_steps": 3, "grid_width": 20, "grid_height": 20}))
    return path


def test_run_resume_analyze_map(tmp_path, tiny_config, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", str(tiny_config), "--out", str(out), "--until", "4", "--quiet"]) == EXIT_OK
    assert main(["resume", "--checkpoint", str(out / "checkpoint.pkl"), "--quiet"]) == EXIT_OK
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 1 + 6
    assert main(["analyze", "--trace", str(out / "trace.jsonl"), "--out", str(tmp_path / "an")]) == EXIT_OK
    assert (tmp_path / "an" / "regularities.csv").read_text().count("\n") == 8
    assert main(["map", "export", "--trace", str(out / "trace.jsonl"), "--steps", "initial,2,5",
                 "--out", str(tmp_path / "maps")]) == EXIT_OK
    assert sorted(p.name for p in (tmp_path / "maps").iterdir()) == ["map_0002.svg", "map_0005.svg",
                                                                     "map_initial.svg"]


def test_shock_subcommand(tmp_path, tiny_config):
    out = tmp_path / "shock"
    assert main(["shock", "--config", str(tiny_config), "--scenario", "price-impulse-down", "--trigger", "2",
                 "--out", str(out), "--quiet"]) == EXIT_OK
    assert main(["analyze", "--trace", str(out / "trace.jsonl"), "--out", str(out / "an")]) == EXIT_OK
    assert (out / "an" / "impulse.csv").exists()


def test_error_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("household_tax: [[5, 0.1]]\n")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["resume", "--checkpoint", str(tmp_path / "nope.pkl")]) == EXIT_CHECKPOINT
    junk = tmp_path / "t.jsonl"
    junk.write_text("not a trace\n")
    assert main(["analyze", "--trace", str(junk), "--out", str(tmp_path / "o")]) == EXIT_ANALYSIS
    assert main(["analyze", "--trace", str(junk), "--out", str(tmp_path / "o"), "--regularity", "zzz"]) \
        == EXIT_ANALYSIS
    assert "error:" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "agentecon", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "analyze" in res.stdout
