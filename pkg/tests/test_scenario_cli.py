import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtdc.cli import main, parse_tau_list, read_trace_csv
from mtdc.controller import ControllerParams
from mtdc.plant import InjectionProfile
from mtdc.scenario import ScenarioError, bundled_scenario_path, dump_scenario, load_scenario, parse_scenario

from conftest import models

FOURBUS = bundled_scenario_path()

MINIMAL = """
[network]
buses = 2
[buses]
capacitance = 1
v_nom = 1
[lines]
1-2 = 0.5
[controller]
k_p = 1
k_v = 1
gamma = 0.5
delta = 0.5
[injection]
initial = 1 -0.5
[simulation]
t_end = 2
step = 0.01
"""


def test_bundled_scenario_loads():
    sc = load_scenario(FOURBUS)
    assert sc.n == 4 and sc.params.K_V == (1.5,) * 4
    assert sc.profile.final.tolist() == [300.0, 200.0, -300.0, -400.0]
    assert sc.sim.method == "etdrk4"
    assert sc.sweep_taus[0] == 0.0 and sc.sweep_taus[-1] == 1.0


def test_minimal_scenario_broadcasts():
    sc = parse_scenario(MINIMAL)
    assert sc.model.capacitances == (1.0, 1.0)
    assert sc.params.V_nom == (1.0, 1.0)
    assert sc.initial_mode == "steady"


@pytest.mark.parametrize(
    "old, new, field",
    [
        ("1-2 = 0.5", "1-2 = -0.5", "1-2"),
        ("buses = 2", "buses = two", "buses"),
        ("k_v = 1", "k_v = 1 2 3", "k_v"),
        ("step = 0.01", "step = 0", "step"),
        ("[lines]\n1-2 = 0.5", "[lines]\n1-2 = 0.5\n1-x = 2", "1-x"),
    ],
)
def test_errors_name_the_field(old, new, field):
    with pytest.raises((ScenarioError, ValueError), match=field):
        parse_scenario(MINIMAL.replace(old, new))


def test_missing_section():
    with pytest.raises(ScenarioError, match="controller"):
        parse_scenario(MINIMAL.replace("[controller]", "[ctrl]"))


def test_round_trip_bundled():
    sc = load_scenario(FOURBUS)
    again = parse_scenario(dump_scenario(sc), sc.name)
    assert dump_scenario(again) == dump_scenario(sc)
    assert again.model == sc.model and again.params == sc.params and again.sim == sc.sim


@given(models(max_n=5), st.floats(0.01, 10), st.floats(0.01, 10))
def test_round_trip_random(model, gamma, delta):
    sc = parse_scenario(MINIMAL)
    n = model.n
    p = ControllerParams(K_P=(1.0,) * n, K_V=(0.5,) * n, gamma=gamma, delta=delta, V_nom=(1.0,) * n)
    sc = replace(sc, model=model, params=p, profile=InjectionProfile.constant(np.linspace(-1, 1, n)))
    again = parse_scenario(dump_scenario(sc))
    assert again.model.L_R.tolist() == model.L_R.tolist()
    assert again.model.L_C.tolist() == model.L_C.tolist()
    assert again.params == p


def test_parse_tau_list():
    assert parse_tau_list("0, 0.1,0.5") == [0.0, 0.1, 0.5]
    assert parse_tau_list("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ValueError):
        parse_tau_list("0:1:0")


def test_cli_simulate(tmp_path, capsys):
    assert main(["simulate", "--scenario", str(FOURBUS), "--out", str(tmp_path), "--format", "machine"]) == 0
    summary = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(summary["u_final"], [50.0] * 4, rtol=1e-6)
    assert summary["V_rel_error"] < 1e-6
    assert summary["spread_observed"] <= summary["spread_bound"]
    assert max(summary["V_settling"]) <= 3.0
    tr = read_trace_csv(tmp_path / "trace.csv")
    assert set(tr) >= {"t", "V_1", "u_4", "Vhat_2", "Vbar_3"}
    assert tr["t"][-1] == pytest.approx(30.0)
    assert (tmp_path / "summary.json").exists()


def test_cli_analyze_and_dispatch(capsys):
    assert main(["analyze", "--scenario", str(FOURBUS), "--format", "machine"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["stable"] and rep["zero_multiplicity"] == 1
    assert rep["certificate"]["applicable"]
    assert main(["dispatch", "--scenario", str(FOURBUS), "--format", "machine"]) == 0
    d = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(d["u_star"], [50.0] * 4)


def test_cli_text_format(capsys):
    assert main(["dispatch", "--scenario", str(FOURBUS)]) == 0
    assert "u_star" in capsys.readouterr().out


def test_cli_disconnected_grid_is_config_error(tmp_path, capsys):
    text = MINIMAL.replace("buses = 2", "buses = 3").replace("initial = 1 -0.5", "initial = 1 -0.5 0")
    path = tmp_path / "bad.scenario"
    path.write_text(text)
    assert main(["analyze", "--scenario", str(path)]) == 2
    assert "disconnected" in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["analyze", "--scenario", str(tmp_path / "nope.scenario")]) == 2


def test_cli_bad_delay_step(tmp_path, capsys):
    text = MINIMAL.replace("gamma = 0.5", "gamma = 0.5\ntau = 0.015")
    path = tmp_path / "d.scenario"
    path.write_text(text)
    assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path)]) == 2
    assert "multiple" in capsys.readouterr().err


@pytest.mark.slow
def test_cli_sweep_reports_divergence(capsys):
    assert main(["sweep-delay", "--scenario", str(FOURBUS), "--tau", "0,0.9", "--format", "machine"]) == 0
    rep = json.loads(capsys.readouterr().out)
    rows = {r["tau"]: r for r in rep["rows"]}
    assert not rows[0.0]["diverged"]
    assert rows[0.9]["diverged"]
    assert rep["smallest_diverged_tau"] == 0.9


def test_cli_certify_sweep(capsys):
    assert main(["certify-sweep", "--count", "40", "--seed", "3", "--format", "machine"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["counterexamples"] == 0
