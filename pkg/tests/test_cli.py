import subprocess
import sys

import pytest

from _scenes import scenario_text
from depthboot.cli import main


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(scenario_text(scene={"obstacles": [{"lo": [3.0, -0.4, 0.0], "hi": [3.4, 0.4, 0.8]}]}))
    return path


def test_full_round(tmp_path, scenario_file, capsys):
    bundle, out = tmp_path / "b", tmp_path / "r"
    assert main(["synth", "gen", "--scenario", str(scenario_file), "--out", str(bundle), "--seed", "4"]) == 0
    assert main(["replay", "run", "--bundle", str(bundle), "--configs", "L,L+D", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "L+D" in text and "delta%" in text
    assert {p.name for p in out.iterdir()} == {"frames.csv", "latency.csv", "summary.csv"}
    assert main(["replay", "eval-depth", "--bundle", str(bundle), "--band", "0.3:3", "--out", str(out)]) == 0
    assert "absrel=" in capsys.readouterr().out
    assert main(["replay", "dump-grid", "--bundle", str(bundle), "--config", "L+D", "--frame", "1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) >= 120


def test_default_configs_from_manifest(tmp_path, scenario_file, capsys):
    main(["synth", "gen", "--scenario", str(scenario_file), "--out", str(tmp_path / "b")])
    assert main(["replay", "run", "--bundle", str(tmp_path / "b"), "--out", str(tmp_path / "r")]) == 0
    rows = (tmp_path / "r" / "summary.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["L", "L+S", "L+D", "D"]


def test_scenario_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(scenario_text().replace('"seed"', '"sead"'))
    assert main(["synth", "gen", "--scenario", str(bad), "--out", str(tmp_path / "b")]) == 2
    assert "sead" in capsys.readouterr().err
    assert main(["synth", "gen", "--scenario", "nonexistent", "--out", str(tmp_path / "b")]) == 2


def test_unknown_config_exit_code(tmp_path, scenario_file):
    main(["synth", "gen", "--scenario", str(scenario_file), "--out", str(tmp_path / "b")])
    assert main(["replay", "run", "--bundle", str(tmp_path / "b"), "--configs", "L,Q", "--out", str(tmp_path / "r")]) == 2


def test_data_error_exit_code(tmp_path, scenario_file, capsys):
    assert main(["replay", "run", "--bundle", str(tmp_path / "missing"), "--out", str(tmp_path / "r")]) == 3
    main(["synth", "gen", "--scenario", str(scenario_file), "--out", str(tmp_path / "b")])
    (tmp_path / "b" / "frames" / "000000.dfb").write_bytes(b"DFB1\x00")
    assert main(["replay", "eval-depth", "--bundle", str(tmp_path / "b"), "--out", str(tmp_path / "e")]) == 3
    assert main(["replay", "dump-grid", "--bundle", str(tmp_path / "b"), "--config", "L", "--frame", "9"]) == 3


def test_bad_band_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["replay", "eval-depth", "--bundle", str(tmp_path), "--band", "1:0.5", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_help_documents_configuration_mapping():
    out = subprocess.run(
        [sys.executable, "-m", "depthboot.cli", "--help"], capture_output=True, text=True, check=True
    ).stdout
    for name in ("Base", "A1", "A4", "A6", "L+S", "L+D+dyn", "class_aware", "corridor_width", "dynamic"):
        assert name in out
    assert "A6       sources=D      inflation=class_aware" in out
    run_help = subprocess.run(
        [sys.executable, "-m", "depthboot.cli", "replay", "run", "--help"], capture_output=True, text=True, check=True
    ).stdout
    assert "L+D+dyn" in run_help
