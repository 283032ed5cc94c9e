"""Configuration loading, dotted overrides, and the command-line front end."""

import json

import pytest

from inscycle.cli import main
from inscycle.config import apply_overrides, load_config
from inscycle.errors import ConfigError


def test_defaults_when_no_file():
    cfg = load_config(None)
    assert cfg.market.theta == 2.8
    assert cfg.solver.grid_size == 2001
    assert cfg.sweep.axis == "gamma"
    assert cfg.output.directory == "out"


def test_load_file_with_lambda_alias(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "market": {"lambda": 0.05, "rho": 0.1},
        "solver": {"grid_size": 1001},
        "sweep": {"axis": "theta", "values": [1.0, 2.0]},
    }))
    cfg = load_config(path)
    assert cfg.market.lam == 0.05
    assert cfg.market.rho == 0.1
    assert cfg.market.eta == 0.28          # untouched fields keep defaults
    assert cfg.solver.grid_size == 1001
    assert cfg.sweep.values == (1.0, 2.0)


def test_load_rejects_unknown_names(tmp_path):
    bad_key = tmp_path / "a.json"
    bad_key.write_text(json.dumps({"market": {"volatility": 0.2}}))
    with pytest.raises(ConfigError):
        load_config(bad_key)
    bad_block = tmp_path / "b.json"
    bad_block.write_text(json.dumps({"markets": {}}))
    with pytest.raises(ConfigError):
        load_config(bad_block)
    not_json = tmp_path / "c.json"
    not_json.write_text("theta = 2.8")
    with pytest.raises(ConfigError):
        load_config(not_json)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_load_rejects_invalid_values(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"market": {"theta": -1.0}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_overrides_beat_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"market": {"rho": 0.1}}))
    cfg = apply_overrides(load_config(path),
                          ["market.rho=0.3", "market.lambda=0.06",
                           "solver.grid_size=501",
                           "sweep.values=[0.1, 0.2]"])
    assert cfg.market.rho == 0.3
    assert cfg.market.lam == 0.06
    assert cfg.solver.grid_size == 501
    assert cfg.sweep.values == (0.1, 0.2)


def test_override_rejects_malformed_items():
    cfg = load_config(None)
    for item in ("rho=0.2", "market.rho", "market.volatility=0.2",
                 "ocean.rho=0.2", "market.theta=-1"):
        with pytest.raises(ConfigError):
            apply_overrides(cfg, [item])


def test_cli_solve_writes_solution(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--out", str(out)]) == 0
    assert (out / "equilibrium.csv").exists()
    meta = json.loads((out / "equilibrium.json").read_text())
    assert meta["M_low"] == pytest.approx(0.3240, rel=1e-3)
    assert "M_low" in capsys.readouterr().err


def test_cli_solve_is_idempotent(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--out", str(a)]) == 0
    assert main(["solve", "--out", str(b)]) == 0
    assert (a / "equilibrium.csv").read_bytes() == \
        (b / "equilibrium.csv").read_bytes()
    assert (a / "equilibrium.json").read_bytes() == \
        (b / "equilibrium.json").read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["solve", "--set", "market.theta=0",
                 "--out", str(tmp_path)]) == 2
    assert "theta" in capsys.readouterr().err
    assert main(["solve", "--set", "market.theta=50",
                 "--out", str(tmp_path)]) == 1
    assert "no equilibrium" in capsys.readouterr().err
    assert main(["solve", "--set", "bogus", "--out", str(tmp_path)]) == 2


def test_cli_sweep(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--set", "sweep.axis=theta",
                 "--set", "sweep.values=[2.8, 50.0]",
                 "--out", str(out)]) == 0
    lines = (out / "sweep_theta.csv").read_text().splitlines()
    assert lines[0] == "value,M_low,M_high,dM,status"
    assert lines[1].endswith(",ok")
    assert lines[2].endswith(",NoEquilibrium")


def test_cli_simulate(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--set", "simulation.horizon=20",
                 "--set", "simulation.dt=0.001",
                 "--set", "output.stride=1000",
                 "--out", str(out)]) == 0
    path_lines = (out / "path.csv").read_text().splitlines()
    assert path_lines[0] == "t,M"
    assert len(path_lines) == 21          # header + 20000 steps / 1000
    assert (out / "occupancy.csv").exists()


def test_cli_cycles_and_density(tmp_path):
    out = tmp_path / "cy"
    assert main(["cycles", "--out", str(out)]) == 0
    summary = json.loads((out / "cycles.json").read_text())
    assert summary["soft_duration"] == pytest.approx(39.28, rel=0.02)
    assert (out / "durations.csv").exists()
    assert main(["density", "--out", str(out)]) == 0
    assert (out / "density.csv").exists()


def test_cli_svg_emission(tmp_path):
    out = tmp_path / "svg"
    assert main(["solve", "--set", "output.emit_svg=true",
                 "--out", str(out)]) == 0
    text = (out / "u_vs_M.svg").read_text()
    assert text.startswith("<svg") and "polyline" in text


def test_cli_out_env_overrides_flag(tmp_path, monkeypatch):
    env_dir = tmp_path / "env"
    monkeypatch.setenv("INSCYCLE_OUT", str(env_dir))
    assert main(["solve", "--out", str(tmp_path / "flag")]) == 0
    assert (env_dir / "equilibrium.csv").exists()
    assert not (tmp_path / "flag").exists()
