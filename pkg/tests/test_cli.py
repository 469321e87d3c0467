"""CLI behavior: outputs, exit codes, config handling, determinism."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from roaqc.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def test_version(runner):
    res = runner.invoke(main, ["--version"])
    assert res.exit_code == 0
    assert "roaqc" in res.output


def test_sweep_writes_report(runner, tmp_path):
    out = tmp_path / "rep"
    res = runner.invoke(main, ["sweep", "--system", "eq15", "--recipe", "set2",
                               "--alpha-grid", "2:5:10", "--refine", "6",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "verify PASS" in res.output
    report = json.loads((out / "report.json").read_text())
    assert report["format"] == "roaqc-report-1"
    assert report["qc_count"] == 5
    assert report["result"]["status"] == "Optimal"
    assert abs(report["result"]["r"] - 3.5224) < 0.02 * 3.5224
    curve = (out / "curve.csv").read_text().splitlines()
    assert curve[0] == "alpha,r,status,iterations,stage"
    assert len(curve) == 1 + 10 + 6
    assert (out / "run_meta.json").exists()


def test_sweep_deterministic_bytes(runner, tmp_path):
    args = ["sweep", "--system", "eq15", "--recipe", "set1",
            "--alpha-grid", "2:4:6", "--refine", "4", "--seed", "3"]
    a, b = tmp_path / "a", tmp_path / "b"
    res1 = runner.invoke(main, args + ["--out", str(a)])
    res2 = runner.invoke(main, args + ["--out", str(b)])
    assert res1.exit_code == 0 and res2.exit_code == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "curve.csv").read_bytes() == (b / "curve.csv").read_bytes()


def test_analyze_then_verify(runner, tmp_path):
    out = tmp_path / "rep"
    res = runner.invoke(main, ["analyze", "--system", "eq16", "--alpha",
                               "1.346", "--recipe", "set8", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "77 constraints" in res.output
    res2 = runner.invoke(main, ["verify", "--report",
                                str(out / "report.json")])
    assert res2.exit_code == 0, res2.output
    assert "verification PASS" in res2.output


def test_verify_flags_tampered_certificate(runner, tmp_path):
    out = tmp_path / "rep"
    runner.invoke(main, ["analyze", "--system", "eq16", "--alpha", "1.346",
                         "--recipe", "set8", "--out", str(out)])
    path = out / "report.json"
    report = json.loads(path.read_text())
    # shrink P so the ellipsoid cover constraint breaks
    P = 0.5 * np.array(report["certificate"]["P"])
    report["certificate"]["P"] = P.tolist()
    path.write_text(json.dumps(report))
    res = runner.invoke(main, ["verify", "--report", str(path)])
    assert res.exit_code == 5
    assert "FAIL" in res.output


def test_analyze_infeasible_exit_code(runner):
    res = runner.invoke(main, ["analyze", "--system", "eq16", "--alpha", "50",
                               "--recipe", "set1"])
    assert res.exit_code == 3
    assert "Infeasible" in res.output


def test_sweep_infeasible_exit_code(runner):
    res = runner.invoke(main, ["sweep", "--system", "eq16", "--recipe", "set1",
                               "--alpha-grid", "30:50:3", "--refine", "0"])
    assert res.exit_code == 3


def test_bad_alpha_grid_is_usage_error(runner):
    res = runner.invoke(main, ["sweep", "--system", "eq15",
                               "--alpha-grid", "nope"])
    assert res.exit_code == 2


def test_unknown_system_is_usage_error(runner):
    res = runner.invoke(main, ["analyze", "--system", "no-such-system",
                               "--alpha", "1.0"])
    assert res.exit_code == 2


def test_config_file_fills_defaults(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"recipe": "set2", "alpha-grid": "2:5:8",
                               "refine": "4"}))
    res = runner.invoke(main, ["sweep", "--system", "eq15",
                               "--config", str(cfg)])
    assert res.exit_code == 0, res.output
    assert "set2" in res.output
    assert "5 constraints" in res.output


def test_flags_beat_config(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"recipe": "set2"}))
    res = runner.invoke(main, ["sweep", "--system", "eq15", "--recipe", "set1",
                               "--alpha-grid", "2:4:6", "--refine", "2",
                               "--config", str(cfg)])
    assert res.exit_code == 0, res.output
    assert "set1" in res.output
    assert "3 constraints" in res.output


def test_unknown_config_key_rejected(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"recipe": "set2", "bogus": 1}))
    res = runner.invoke(main, ["sweep", "--system", "eq15",
                               "--config", str(cfg)])
    assert res.exit_code == 2
    assert "bogus" in res.output


def test_simulate_batch_and_csv(runner, tmp_path):
    out = tmp_path / "traj.csv"
    res = runner.invoke(main, ["simulate", "--system", "eq15", "--radius",
                               "2.0", "--count", "8", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "Converged: 8" in res.output
    lines = out.read_text().splitlines()
    assert lines[0] == "x0_1,x0_2,verdict,t_final,norm_final"
    assert len(lines) == 9


def test_simulate_upper_bound(runner):
    res = runner.invoke(main, ["simulate", "--system", "eq15",
                               "--upper-bound", "--r-max", "8",
                               "--directions", "16", "--t-final", "20"])
    assert res.exit_code == 0, res.output
    assert "smallest diverging radius" in res.output


def test_simulate_requires_radius(runner):
    res = runner.invoke(main, ["simulate", "--system", "eq15"])
    assert res.exit_code == 2


def test_system_from_path(runner, tmp_path):
    spec = {"n": 1, "A": [[-1.0]], "B": [[0.5]], "name": "custom"}
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(spec))
    res = runner.invoke(main, ["analyze", "--system", str(path),
                               "--alpha", "0.5", "--recipe", "set1"])
    assert res.exit_code == 0, res.output
    assert "custom" in res.output
