"""End-to-end tests of the heatflow command line"""

import json

import numpy as np
import pytest

from apps.heatflow.src import cli
from apps.heatflow.src.cli import main


def write_config(tmp_path, data, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def heat_config(tmp_path):
    return write_config(
        tmp_path,
        {
            "mode": "HEAT",
            "network": {"lattice": {"dim": 1, "N": 4}},
            "reservoirs": {"temperatures": [2.0, 1.0], "gamma0": 0.1},
            "options": {"transmission": {"omega_min": 0.5, "omega_max": 5.0, "points": 10}},
        },
    )


def test_heat_writes_tables(tmp_path, heat_config, capsys):
    out = tmp_path / "out"
    assert main(["heat", "--config", heat_config, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "✅ Heat currents (INFINITE_CUTOFF)" in printed
    assert "📁" in printed

    lines = (out / "heat.csv").read_text().split("\n")
    assert lines[0] == "l,l_prime,value"
    assert lines[1].startswith("0,1,")
    assert "e" in lines[1].split(",")[2]
    assert (out / "transmission.csv").read_text().startswith("omega,l,l_prime,value\n")
    document = json.loads((out / "heat.json").read_text())
    assert document["mode"] == "HEAT"
    assert document["totals"][0] > 0


def test_state_json_only(tmp_path, capsys):
    config = write_config(
        tmp_path,
        {
            "mode": "STATE",
            "network": {"random": {"K": 3}},
            "reservoirs": {"temperatures": [1.0, 0.5], "cutoff": 20.0},
            "regime": "FINITE_CUTOFF",
            "output": {"format": "json"},
        },
    )
    out = tmp_path / "state"
    assert main(["state", "-c", config, "-o", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["state.json"]
    assert "📊 Local temperatures" in capsys.readouterr().out


def test_deterministic_scaling_output_is_reproducible(tmp_path):
    config = write_config(
        tmp_path,
        {
            "mode": "SCALING",
            "network": {"lattice": {"dim": 1, "mass_spread": 0.3}},
            "reservoirs": {"temperatures": [1.05, 0.95], "gamma0": 1e-3},
            "regime": "WEAK",
            "ensemble": {"realizations": 2, "master_seed": 3},
            "sweep": {"sizes": [4, 6, 8]},
        },
    )
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["scaling", "-c", config, "-o", str(first), "--deterministic", "--threads", "2"]) == 0
    assert main(["scaling", "-c", config, "-o", str(second), "--deterministic"]) == 0
    for name in ("scaling.csv", "scaling_cells.csv", "scaling_fit.csv", "scaling.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    header = (first / "scaling_cells.csv").read_text().splitlines()[0]
    assert header == "gamma0,N,mean_J_over_dT,std_J_over_dT,count,failures"


def test_verify_passes(tmp_path, capsys):
    config = write_config(
        tmp_path,
        {
            "mode": "VERIFY",
            "network": {"random": {"K": 2}},
            "reservoirs": {"temperatures": [1.2, 0.4], "gamma0": 0.1, "cutoff": 15.0},
            "regime": "FINITE_CUTOFF",
            "ensemble": {"master_seed": 11},
        },
    )
    assert main(["verify", "-c", config]) == 0
    assert "✅ all rows pass" in capsys.readouterr().out


def test_config_errors_exit_with_one(tmp_path, capsys):
    assert main(["heat", "-c", str(tmp_path / "missing.json")]) == 1
    assert "CONFIG_ERROR" in capsys.readouterr().err

    config = write_config(tmp_path, {"mode": "HEAT", "network": {"lattice": {"dim": 1}}, "colour": "red"})
    assert main(["heat", "-c", config]) == 1
    assert "❌" in capsys.readouterr().err


def test_bad_environment_exits_with_one(heat_config, monkeypatch, capsys):
    monkeypatch.setenv("HEATFLOW_THREADS", "zero")
    assert main(["heat", "-c", heat_config]) == 1
    assert "HEATFLOW_THREADS" in capsys.readouterr().err


def test_linear_algebra_failure_exits_with_one(heat_config, monkeypatch, capsys):
    def broken(config, settings):
        raise np.linalg.LinAlgError("singular matrix")

    monkeypatch.setitem(cli.RUNNERS, "heat", broken)
    assert main(["heat", "-c", heat_config]) == 1
    assert "NUMERICAL_DEGENERACY" in capsys.readouterr().err


def test_verb_is_required():
    with pytest.raises(SystemExit):
        main([])
