import json

import numpy as np
import pytest

from iongate.cli import main


def test_crystal_json(tmp_path):
    out = tmp_path / "chain.json"
    assert main(["crystal", "--ions", "5", "--json", str(out)]) == 0
    blob = json.loads(out.read_text())
    assert blob["n"] == 5
    assert len(blob["positions"]) == 5
    assert blob["mode_eigenvalues"][0] == pytest.approx(1.0, abs=1e-9)


def test_gate_evaluation_json(tmp_path):
    out = tmp_path / "gate.json"
    code = main(
        [
            "gate", "--ions", "2", "--pair", "1,2", "--tau", "2.0",
            "--mu", "0.9", "--nbar", "1.0", "--json", str(out),
        ]
    )
    assert code == 0
    blob = json.loads(out.read_text())
    assert blob["phi_total"] == pytest.approx(np.pi / 4.0, abs=1e-12)
    assert 0.25 <= blob["fidelity"] <= 1.0


def test_gate_optimize_json(tmp_path):
    out = tmp_path / "opt.json"
    code = main(
        [
            "gate", "--ions", "2", "--pair", "1,2", "--tau", "1.3",
            "--mu", "2.31", "--segments", "5", "--optimize", "--nbar", "3.0",
            "--json", str(out),
        ]
    )
    assert code == 0
    blob = json.loads(out.read_text())
    assert blob["scope"] == "full"
    assert len(blob["amps"]) == 5
    assert blob["fidelity"] == pytest.approx(1.0, abs=1e-9)


def test_sweep_with_config_and_overrides(tmp_path):
    config = tmp_path / "sweep.json"
    config.write_text(
        json.dumps(
            {
                "n_ions": 2,
                "pair": [1, 2],
                "tau_list": [1.0],
                "mu_min": 1.5,
                "mu_max": 2.5,
                "points": 40,
                "segments": 1,
                "nbar": 0.0,
            }
        )
    )
    out = tmp_path / "sweep.csv"
    code = main(
        ["sweep", "--config", str(config), "--points", "11", "--csv", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 12  # header + overridden point count
    assert lines[0].startswith("mu,tau_over_tau0")


def test_sweep_missing_settings(tmp_path, capsys):
    code = main(["sweep", "--csv", str(tmp_path / "x.csv")])
    assert code == 2
    assert "missing required settings" in capsys.readouterr().err


def test_gate_restricted_scope(tmp_path):
    out = tmp_path / "scoped.json"
    code = main(
        [
            "gate", "--ions", "20", "--pair", "10,11", "--tau", "0.1",
            "--mu", "10", "--segments", "5", "--optimize", "--scope", "n=2",
            "--nbar", "3.0", "--json", str(out),
        ]
    )
    assert code == 0
    assert json.loads(out.read_text())["scope"] == "n=2"


def test_domain_errors_exit_cleanly(capsys):
    code = main(["gate", "--ions", "2", "--pair", "1,3", "--tau", "1.0", "--mu", "2.0"])
    assert code == 1
    assert "out of range" in capsys.readouterr().err


def test_reproduce_fig1(tmp_path, capsys):
    code = main(["reproduce", "fig1", "--out", str(tmp_path)])
    assert code == 0
    printed = capsys.readouterr().out.splitlines()
    assert sorted(p.split("/")[-1] for p in printed) == ["fig1a.csv", "fig1b.csv"]
    header = (tmp_path / "fig1a.csv").read_text().splitlines()[0]
    assert header == "mu,tau_over_tau0,fidelity"
    assert (tmp_path / "fig1b.csv").read_text().splitlines()[0] == (
        "mu,tau_over_tau0,required_amp"
    )


def test_oracle_json(tmp_path):
    out = tmp_path / "oracle.json"
    code = main(
        [
            "oracle", "--ions", "2", "--tau", "1.0", "--mu", "2.4",
            "--nbar", "0.0", "--json", str(out),
        ]
    )
    assert code == 0
    blob = json.loads(out.read_text())
    assert set(blob) >= {"fidelity_numeric", "fidelity_analytic", "abs_difference"}
    assert blob["abs_difference_exact_decay"] < 1e-4
