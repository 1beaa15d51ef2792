import json

import pytest

from trimem.cli import run_cli
from trimem.homodyne import read_trace_file
from trimem.report import bundled_spec


def test_criteria_default(capsys):
    assert run_cli(["criteria"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["stage"] == "released"
    assert out["entangled"] is True
    assert out["I"] == pytest.approx(0.953337, abs=1e-6)


def test_criteria_fixed_gain(capsys):
    assert run_cli(["criteria", "--stage", "input", "--gain", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["gains"] == [0.0, 0.0, 0.0]


def test_sweep_to_file(tmp_path):
    out = tmp_path / "s.csv"
    assert run_cli(["sweep", "--r", "0:1:3", "--eta", "0:1:4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r,eta,g,I,stage" and len(lines) == 13


def test_mc_command(tmp_path, capsys):
    stem = tmp_path / "tr"
    shots = tmp_path / "shots.csv"
    code = run_cli(["mc", "--shots", "500", "--seed", "3", "--traces", str(stem),
                    "--shots-csv", str(shots), "--timing"])
    assert code == 0
    captured = capsys.readouterr()
    out = json.loads(captured.out)
    assert out["shots"] == 500 and len(out["stderr"]) == 3
    assert "elapsed" in captured.err
    traces, rate = read_trace_file(tmp_path / "tr_ch1.qtrc")
    assert rate == bundled_spec().mc.sample_rate_hz and traces.shape[0] == 200
    assert len(shots.read_text().splitlines()) == 1001


def test_report(tmp_path, capsys):
    csv_path = tmp_path / "r.csv"
    assert run_cli(["report", "--csv", str(csv_path)]) == 0
    text = capsys.readouterr().out
    assert "<d2(X2-X3)>" in text and "-3.30" in text
    assert len(csv_path.read_text().splitlines()) == 19


def test_validate_passes_on_bundled_config(capsys):
    assert run_cli(["validate"]) == 0
    out = capsys.readouterr().out
    assert "12/12 comparisons passed" in out


def test_validate_fails_on_wrong_physics(tmp_path, capsys):
    spec = bundled_spec()
    d = spec.to_dict()
    d["r"] = [0.1, 0.1, 0.1]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    assert run_cli(["validate", "--config", str(p)]) == 3
    assert run_cli(["validate", "--config", str(p), "--schema-only"]) == 0


def test_config_errors(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text('{"r": -1}')
    assert run_cli(["criteria", "--config", str(p)]) == 2
    assert run_cli(["criteria", "--config", str(tmp_path / "missing.json")]) == 2
    assert run_cli(["sweep", "--r", "nope"]) == 2
    assert run_cli(["criteria", "--bogus"]) == 2
    assert "config error" in capsys.readouterr().err


def test_band_above_nyquist_is_config_error(tmp_path, capsys):
    p = tmp_path / "x.json"
    d = bundled_spec().to_dict()
    d["mc"]["sample_rate_hz"] = 2e7
    d["mc"]["filter_center_hz"] = 9.5e6
    p.write_text(json.dumps(d))
    assert run_cli(["mc", "--config", str(p), "--shots", "100"]) == 2


def test_numeric_failure_exit_code(monkeypatch, capsys):
    import numpy as np

    import trimem.cli as cli

    def boom(*args, **kwargs):
        raise np.linalg.LinAlgError("covariance not PSD")

    monkeypatch.setattr(cli, "run_mc", boom)
    assert run_cli(["mc", "--shots", "100"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "trimem", "criteria", "--stage", "atomic"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["stage"] == "atomic"
