import json
import math
import subprocess
import sys

import numpy as np
import pytest

from spde_ldp.cli import main
from spde_ldp.io import read_path_csv

TAU0 = 0.28157541889826698675


def write_config(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return str(path)


def run(tmp_path, *argv, config=""):
    cfg = write_config(tmp_path, config)
    return main([argv[0], "--config", cfg, "--out", str(tmp_path / "out"), *argv[1:]])


FREE = """\
model: {n: 3, nonlinearity: {kind: zero}}
integrator: {tau: 0.01, eps: 0.0, T: 0.5, y0: [1.0, 0.5, 0.25]}
output: {formats: [csv, json, txt]}
"""


def test_simulate_zero_noise_matches_semigroup(tmp_path, capsys):
    assert run(tmp_path, "simulate", config=FREE) == 0
    path = read_path_csv(str(tmp_path / "out" / "trajectory.csv"))
    expected = np.exp(-math.pi**2 * path.times) * 1.0
    np.testing.assert_allclose(path.nodes[:, 0], expected, rtol=1e-12, atol=1e-12)
    summary = json.loads((tmp_path / "out" / "simulate.json").read_text())
    assert summary["steps"] == 50
    assert "output.dir" not in json.dumps(summary["config"])
    assert "simulated 50 output intervals" in capsys.readouterr().out
    assert not (tmp_path / "out" / "trajectory.png").exists()


def test_csv_carries_provenance_line(tmp_path):
    run(tmp_path, "simulate", config=FREE)
    first = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[0]
    assert first.startswith("# config_hash=") and "seed=0" in first and "version=" in first


def test_tau_above_threshold_is_rejected(tmp_path, capsys):
    cfg = """\
model: {n: 4, nonlinearity: {kind: nemytskij, name: sin}}
integrator: {tau: 0.3, T: 0.6}
"""
    code = run(tmp_path, "simulate", config=cfg)
    err = capsys.readouterr().err
    assert code != 0
    assert "tau_0 = 0.281575" in err
    assert not (tmp_path / "out").exists()


def test_tau_max_command(tmp_path, capsys):
    cfg = "model: {nonlinearity: {kind: nemytskij, name: sin}}\noutput: {formats: [json, txt]}\n"
    assert run(tmp_path, "tau-max", config=cfg) == 0
    doc = json.loads((tmp_path / "out" / "tau_max.json").read_text())
    assert doc["tau_max"] == pytest.approx(TAU0, rel=1e-13)
    assert doc["lipschitz"] == 1.0
    assert "tau_max = 0.2815754189" in capsys.readouterr().out


def test_rate_requires_path(tmp_path, capsys):
    assert run(tmp_path, "rate") == 2
    assert "--path" in capsys.readouterr().err


def test_rate_of_simulated_free_flow_is_zero(tmp_path):
    run(tmp_path, "simulate", config=FREE)
    traj = str(tmp_path / "out" / "trajectory.csv")
    rate_cfg = FREE + "study: {rate: {tau: 0.05}}\n"
    assert run(tmp_path, "rate", "--path", traj, config=rate_cfg) == 0
    doc = json.loads((tmp_path / "out" / "rate.json").read_text())
    assert doc["semi"]["value"] < 1e-20
    assert doc["full"]["value"] == doc["semi"]["value"]
    assert (tmp_path / "out" / "control.csv").exists()


def test_invalid_config_exits_2(tmp_path, capsys):
    assert run(tmp_path, "simulate", config="model: {n: -2}\n") == 2
    assert "model.n" in capsys.readouterr().err


def test_seed_override_changes_hash_and_output(tmp_path):
    noisy = FREE.replace("eps: 0.0", "eps: 0.5")
    run(tmp_path, "simulate", "--seed", "1", config=noisy)
    a = (tmp_path / "out" / "trajectory.csv").read_bytes()
    run(tmp_path, "simulate", "--seed", "2", config=noisy)
    b = (tmp_path / "out" / "trajectory.csv").read_bytes()
    assert a != b
    run(tmp_path, "simulate", "--seed", "1", config=noisy)
    assert (tmp_path / "out" / "trajectory.csv").read_bytes() == a


def test_quasipotential_linear_reports_closed_form(tmp_path):
    cfg = """\
model: {n: 1}
study: {quasipotential: {target: [0.1], horizons: [0.5, 1.0], h: 0.005}}
output: {formats: [json, csv]}
"""
    assert run(tmp_path, "quasipotential", config=cfg) == 0
    doc = json.loads((tmp_path / "out" / "quasipotential.json").read_text())
    assert doc["closed_form"] == pytest.approx(0.01 * math.pi**6, rel=1e-14)
    # finite horizon and grid keep the minimum above the infinite-horizon value
    assert doc["closed_form"] < doc["value"] < 1.01 * doc["closed_form"]
    assert [r["T"] for r in doc["per_horizon"]] == [0.5, 1.0]


def test_simulate_writes_png(tmp_path):
    cfg = FREE.replace("formats: [csv, json, txt]", "formats: [csv, png]")
    assert run(tmp_path, "simulate", config=cfg) == 0
    png = (tmp_path / "out" / "trajectory.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "spde_ldp", "--version"], capture_output=True,
                         text=True, check=True)
    assert out.stdout.startswith("spde-ldp ")
