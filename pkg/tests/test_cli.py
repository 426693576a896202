import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from bingames.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, run
from bingames.config import load_game
from bingames.identify import normalized_truth
from bingames.reference import RHO_MONOTONE, RHO_MULTIPLE

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
CASE1 = str(CONFIGS / "example1_case1.toml")
CASE2 = str(CONFIGS / "example1_case2.toml")
SMALL = str(CONFIGS / "small_linear.toml")
RUN = str(CONFIGS / "run.toml")


def manifest(directory):
    return json.loads((Path(directory) / "manifest.json").read_text())


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_solve_stdout(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(["solve", "--game", CASE2]) == EXIT_OK
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0].startswith("x_1,x_2,n_equilibria")
    assert len(out) == 1 + 3 and all(line.split(",")[2] == "3" for line in out[1:])
    m = manifest(tmp_path)
    assert m["command"] == "solve" and m["result"]["n_equilibria"] == [3]


def test_solve_rho_override(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["solve", "--game", CASE2, "--rho", "0.1", "--out", str(out)]) == EXIT_OK
    assert len(rows(out)) == 1


def test_scan_boundaries(tmp_path):
    out = tmp_path / "scan" / "scan.csv"
    assert run(["scan", "--game", CASE1, "--param", "rho=0.70:0.85:31", "--out", str(out)]) == EXIT_OK
    m = manifest(out.parent)
    (lo, hi, before, after), = m["result"]["boundaries"]["monotone"]
    assert lo <= RHO_MONOTONE <= hi and hi - lo <= 0.005 + 1e-12
    assert m["outputs"] == ["scan.csv"] and len(m["config_hash"]) == 64


def test_scan_count_list(tmp_path):
    out = tmp_path / "c.csv"
    assert run(["scan", "--game", CASE2, "--param", "rho=0.1,0.2,0.25,0.3", "--out", str(out)]) == EXIT_OK
    (lo, hi, before, after), = manifest(tmp_path)["result"]["boundaries"]["count"]
    assert (lo, hi, before, after) == (0.2, 0.25, 1, 3) and lo <= RHO_MULTIPLE <= hi


def test_simulate_reproducible(tmp_path):
    a, b = tmp_path / "a" / "d.csv", tmp_path / "b" / "d.csv"
    assert run(["simulate", "--game", SMALL, "--n", "3000", "--seed", "5", "--out", str(a)]) == EXIT_OK
    assert run(["simulate", "--game", SMALL, "--n", "3000", "--seed", "5", "--threads", "2",
                "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    m = manifest(a.parent)
    assert m["seed"] == 5 and m["game_hash"] == load_game(SMALL)[0].game_hash()
    assert sorted(m["outputs"]) == ["d.csv", "d.csv.meta.json"]
    assert set(m["versions"]) >= {"numpy", "scipy", "python", "bingames"}


def test_estimate_population_matches_truth(tmp_path):
    out = tmp_path / "est"
    assert run(["estimate", "--population", "--game", SMALL, "--config", RUN, "--out", str(out)]) == EXIT_OK
    g, _ = load_game(SMALL)
    for r in rows(out / "payoffs.csv"):
        i = int(r["player"]) - 1
        truth = normalized_truth(g, i, 0.0)[0](float(r["x_i"]))[0]
        assert float(r["value"]) == pytest.approx(truth[0 if r["rivals"] == "0" else 1], abs=1e-6)
    rep = json.loads((out / "report.json").read_text())
    assert rep["mode"] == "population" and rep["failures"] == {}
    assert set(manifest(out)["outputs"]) == {"payoffs.csv", "quantiles.csv", "beliefs.csv",
                                             "copula_grid.csv", "report.json"}


def test_roundtrip_simulate_estimate_test(tmp_path):
    data = tmp_path / "d.csv"
    assert run(["simulate", "--game", SMALL, "--n", "20000", "--seed", "1", "--out", str(data)]) == EXIT_OK
    est = tmp_path / "est"
    assert run(["estimate", "--data", str(data), "--config", RUN, "--out", str(est)]) == EXIT_OK
    rep = json.loads((est / "report.json").read_text())
    assert rep["mode"] == "sample" and set(rep["players"]) == {"1", "2"}
    report = tmp_path / "t" / "report.json"
    assert run(["test", "--data", str(data), "--checks", "zeros,r1,ci", "--out", str(report)]) == EXIT_OK
    t = json.loads(report.read_text())
    assert t["mode"] == "sample"
    assert t["checks"]["zeros"]["verdict"] == "pass"
    # correlated types: conditional independence should be rejected
    assert t["checks"]["ci"]["verdict"] == "fail"


def test_test_population(tmp_path):
    report = tmp_path / "r.json"
    assert run(["test", "--population", "--game", SMALL, "--out", str(report)]) == EXIT_OK
    t = json.loads(report.read_text())
    assert t["checks"]["r1"]["verdict"] == "pass" and t["checks"]["r2"]["verdict"] == "pass"
    assert manifest(tmp_path)["result"]["passed"] is False  # ci fails under correlation


@pytest.mark.parametrize("argv, needle", [
    (["solve"], "--game"),
    (["frobnicate"], "argv"),
    (["simulate", "--game", SMALL, "--out", "x.csv"], "--n"),
    (["scan", "--game", CASE2, "--param", "beta=0:1:3"], "--param"),
    (["test", "--population", "--game", SMALL, "--checks", "r1,r7"], "--checks"),
    (["solve", "--game", CASE2, "--x", "1,2,3"], "--x"),
    (["solve", "--game", CASE2, "--threads", "0"], "--threads"),
])
def test_config_errors_exit_2(argv, needle, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv) == EXIT_CONFIG
    assert needle in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    bad = tmp_path / "run.toml"
    bad.write_text("[estimate]\ndegre = 3\n")
    assert run(["solve", "--game", CASE2, "--config", str(bad), "--out", str(tmp_path / "s.csv")]) == EXIT_CONFIG
    assert "estimate.degre" in capsys.readouterr().err


def test_runtime_error_exit_1(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert run(["estimate", "--data", str(missing), "--out", str(tmp_path / "e")]) == EXIT_RUNTIME
    assert "error" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "bingames.cli", "solve", "--game", CASE2,
                           "--out", str(tmp_path / "s.csv")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "bingames.cli", "solve"], capture_output=True, text=True,
                          cwd=tmp_path)
    assert proc.returncode == 2
    assert np.isfinite(float(rows(tmp_path / "s.csv")[0]["u_star_1"]))
