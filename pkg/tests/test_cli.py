import json
import subprocess
import sys
import time

import numpy as np
import pytest

from coupled_market.cli import main
from coupled_market.forecasters import fit_ar1
from coupled_market.io import read_csv_columns
from coupled_market.market import ScenarioConfig


def run(*argv):
    return main([str(a) for a in argv])


def listing(path):
    return sorted(p.relative_to(path).as_posix() for p in path.rglob("*"))


def test_simulate_writes_benchmark_path(tmp_path):
    out = tmp_path / "path.csv"
    assert run("simulate", "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,D,S,S_obs,B,binding"
    assert len(lines) == 201
    assert listing(tmp_path) == ["path.csv"]


def test_invalid_config_exits_one(tmp_path, capsys):
    bad = ScenarioConfig().to_dict()
    bad["demand"]["persistence"] = 1.5
    bad["matching_m"] = 2.0
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(bad))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "x.csv") == 1
    err = capsys.readouterr().err
    assert "persistence not stationary" in err and "matching efficiency out of range" in err
    assert not (tmp_path / "x.csv").exists()


def test_bad_flags_exit_one(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("simulate", "--out", tmp_path / "x.csv", "--noise", "gamma:1")
    assert exc.value.code == 1
    assert run("montecarlo", "--out", tmp_path / "m", "--reps", 1, "--window", "150:999") == 1


def test_runtime_failure_exits_two(tmp_path, capsys):
    assert run("estimate", "--path", tmp_path / "missing.csv", "--out", tmp_path / "e.json") == 2
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("B,S\n1.0,x\n")
    assert run("estimate", "--path", bad, "--out", tmp_path / "e.json") == 2
    assert "'S' is not numeric" in capsys.readouterr().err


def test_config_round_trip_through_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    assert run("default-config", "--out", cfg) == 0
    assert ScenarioConfig.load(cfg) == ScenarioConfig()
    assert run("simulate", "--config", cfg, "--out", tmp_path / "a.csv") == 0
    assert run("simulate", "--out", tmp_path / "b.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


COMMANDS = {
    "simulate": ["simulate", "--seed", 42, "--noise", "additive:2", "--out", "{out}"],
    "montecarlo": ["montecarlo", "--reps", 3, "--svg", "--out", "{out}"],
    "sensitivity": ["sensitivity", "--reps", 3, "--noise", "none", "--noise", "additive:5", "--out", "{out}"],
    "compare": ["compare", "--reps", 3, "--out", "{out}"],
    "gap": ["gap", "--reps", 2, "--out", "{out}"],
}


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_commands_are_byte_deterministic(tmp_path, name):
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run(*[str(a).format(out=out) for a in COMMANDS[name]]) == 0
        files = [out] if out.is_file() else sorted(p for p in out.rglob("*") if p.is_file())
        outputs.append([f.read_bytes() for f in files])
    assert outputs[0] == outputs[1]
    assert outputs[0]


def test_estimate_is_deterministic(tmp_path):
    run("simulate", "--out", tmp_path / "p.csv")
    for k in range(2):
        assert run("estimate", "--path", tmp_path / "p.csv", "--out", tmp_path / f"e{k}.json") == 0
    assert (tmp_path / "e0.json").read_bytes() == (tmp_path / "e1.json").read_bytes()


def test_montecarlo_outputs(tmp_path):
    out = tmp_path / "mc"
    start = time.perf_counter()
    assert run("montecarlo", "--reps", 1, "--out", out) == 0
    assert time.perf_counter() - start < 1.0
    assert listing(tmp_path) == ["mc", "mc/benchmark_table.csv", "mc/plot_data.csv", "mc/report.json"]
    table = (out / "benchmark_table.csv").read_text().splitlines()
    assert table[0] == "model,pre_rmse,pre_bias,post_rmse,post_bias"
    plot = read_csv_columns(out / "plot_data.csv")
    assert len(plot["t"]) == 70 * 2
    for model in ("demand_only", "coupled"):
        np.testing.assert_array_equal(plot["t"][plot["model"] == model], np.arange(131, 201))


def test_montecarlo_custom_window_and_svg(tmp_path):
    out = tmp_path / "mc"
    assert run("montecarlo", "--reps", 2, "--window", "151:175", "--models", "naive", "coupled",
               "--svg", "--out", out) == 0
    table = (out / "benchmark_table.csv").read_text().splitlines()
    assert table[0] == "model,151-175_rmse,151-175_bias"
    assert (out / "error_paths.svg").read_text().startswith("<svg")


def test_estimate_report(tmp_path):
    run("simulate", "--out", tmp_path / "p.csv")
    assert run("estimate", "--path", tmp_path / "p.csv", "--out", tmp_path / "e.json") == 0
    rep = json.loads((tmp_path / "e.json").read_text())
    assert rep["censored_fraction"] == pytest.approx(rep["binding_fraction"])
    assert rep["tau"] == 1e-9 and rep["ceiling_column"] == "S"
    assert set(rep["params"]) == {"mean", "persistence", "sd"}


def test_estimate_uncensored_and_noisy_ceiling(tmp_path):
    rng = np.random.default_rng(0)
    B = 50 + rng.normal(0, 5, 200)
    csv = tmp_path / "u.csv"
    csv.write_text("t,B,S\n" + "".join(f"{i + 1},{b!r},1000.0\n" for i, b in enumerate(B.tolist())))
    assert run("estimate", "--path", csv, "--out", tmp_path / "u.json") == 0
    rep = json.loads((tmp_path / "u.json").read_text())
    ref = fit_ar1(B)
    assert rep["censored_fraction"] == 0
    assert rep["params"]["mean"] == pytest.approx(ref.mean, rel=1e-12)
    assert rep["params"]["persistence"] == pytest.approx(ref.persistence, rel=1e-12)

    run("simulate", "--noise", "additive:1", "--out", tmp_path / "n.csv")
    assert run("estimate", "--path", tmp_path / "n.csv", "--ceiling", "S_obs", "--tau", 0.5,
               "--out", tmp_path / "n.json") == 0
    rep = json.loads((tmp_path / "n.json").read_text())
    assert rep["tau"] == 0.5 and rep["ceiling_column"] == "S_obs"


def test_gap_outputs(tmp_path):
    assert run("gap", "--shift", 0, "--out", tmp_path / "g0.csv") == 0
    zero = read_csv_columns(tmp_path / "g0.csv")
    assert list(zero) == ["t", "d_aitchison", "d_l1", "binding"]
    assert np.max(zero["d_aitchison"]) < 1e-12

    assert run("gap", "--shift", 1.0, "--out", tmp_path / "g1.csv") == 0
    g = read_csv_columns(tmp_path / "g1.csv")
    bind = g["binding"] == 1
    assert g["d_aitchison"][bind].mean() > g["d_aitchison"][~bind].mean()

    assert run("gap", "--reps", 3, "--out", tmp_path / "g3.csv") == 0
    g3 = read_csv_columns(tmp_path / "g3.csv")
    assert len(g3["rep"]) == 600 and set(g3["rep"]) == {0.0, 1.0, 2.0}
    assert run("gap", "--K", 1, "--out", tmp_path / "bad.csv") == 1


def test_sensitivity_outputs(tmp_path):
    out = tmp_path / "s"
    assert run("sensitivity", "--reps", 20, "--out", out) == 0
    rows = read_csv_columns(out / "sensitivity.csv")
    assert sorted(set(rows["noise"])) == ["additive:10", "additive:2", "additive:5", "none"]
    demand_post = rows["rmse"][(rows["model"] == "demand_only") & (rows["window"] == "post")]
    assert np.all(demand_post == demand_post[0])
    payload = json.loads((out / "sensitivity.json").read_text())
    assert [p["noise"] for p in payload] == ["none", "additive:2", "additive:5", "additive:10"]


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "coupled_market.cli", "simulate", "--out", str(tmp_path / "p.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "coupled_market.cli", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 1
