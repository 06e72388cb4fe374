import json
from pathlib import Path

import numpy as np
import pytest

import tvckit as tk
from tvckit.cli import main
from tvckit.scenario import SchemaError, load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def minimal_scenario(**overrides):
    data = {
        "time": {"kind": "discrete", "t_max": 20},
        "omega": {"probs": [0.5, 0.5]},
        "order": 2,
        "objective": {"builtin": "quadlin-discrete",
                      "params": {"alpha": [1.0, 2.0], "beta": [0.5, 0.4],
                                 "gamma": [0.25, 0.2]}},
        "path": {"closed_form": "quadlin-euler"},
    }
    data.update(overrides)
    return data


class TestScenarioLoading:
    def test_shipped_fixture(self):
        scenario = load_scenario(SCENARIOS / "discrete-counterexample.json")
        assert scenario.echo["time"]["t_max"] == 50
        assert scenario.space.m == 2
        path = scenario.path()
        assert path.values[1, 1, 0] == pytest.approx(1.8)
        q = scenario.perturbation()
        assert q.tail_kind == "eventually-constant"

    def test_all_shipped_fixtures_load(self):
        for name in sorted(SCENARIOS.glob("*.json")):
            scenario = load_scenario(name)
            assert scenario.objective() is not None

    def test_bad_probs_names_key(self):
        with pytest.raises(SchemaError) as err:
            parse_scenario(minimal_scenario(omega={"probs": [0.5, 0.4]}))
        assert err.value.key_path == "omega.probs"

    def test_unknown_key_rejected(self):
        with pytest.raises(SchemaError) as err:
            parse_scenario(minimal_scenario(extra=1))
        assert "extra" in str(err.value)

    def test_undeclared_dsl_symbol(self):
        data = minimal_scenario(
            objective={"expr": "y0 + delta", "constants": {}},
            path={"constant": 1.0})
        with pytest.raises(tk.ExprSyntaxError) as err:
            parse_scenario(data)
        assert "delta" in str(err.value)

    def test_dsl_gradient_check_at_load(self):
        data = minimal_scenario(
            objective={"expr": "(y0 - 1)^2 + y1 + y2", "constants": {}},
            path={"constant": 1.0})
        scenario = parse_scenario(data)
        assert scenario.warnings == ()

    def test_missing_file(self, tmp_path):
        with pytest.raises(tk.InputError):
            load_scenario(tmp_path / "missing.json")

    def test_echo_round_trip(self):
        scenario = load_scenario(SCENARIOS / "discrete-counterexample.json")
        again = parse_scenario(json.loads(json.dumps(scenario.echo)))
        assert again.echo == scenario.echo

    def test_solve_horizon_consistency(self):
        data = minimal_scenario(path={"solve": {"horizon": 5, "guess_constant": 0.0}})
        with pytest.raises(SchemaError) as err:
            parse_scenario(data)
        assert err.value.key_path == "path.solve.horizon"


class TestCliExitCodes:
    def test_tvc_counterexample_exit_1(self, capsys):
        code = main(["tvc", "--scenario",
                     str(SCENARIOS / "discrete-counterexample.json"), "--quiet"])
        assert code == 1

    def test_euler_closed_form_exit_0(self):
        code = main(["euler", "--scenario",
                     str(SCENARIOS / "discrete-counterexample.json"), "--quiet"])
        assert code == 0

    def test_missing_scenario_exit_2(self, capsys):
        code = main(["euler", "--scenario", "/nonexistent.json", "--quiet"])
        assert code == 2

    def test_bad_schema_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(minimal_scenario(omega={"probs": [0.9]})))
        assert main(["euler", "--scenario", str(bad), "--quiet"]) == 2

    def test_solve_household_exit_0(self):
        assert main(["solve", "--scenario", str(SCENARIOS / "household.json"),
                     "--quiet"]) == 0

    def test_correspond_exit_0(self):
        assert main(["correspond", "--scenario",
                     str(SCENARIOS / "discrete-counterexample.json"), "--quiet"]) == 0

    def test_assume_assert_uniform(self, tmp_path):
        # eventually-constant perturbation: asserting uniformity fails
        data = minimal_scenario(
            time={"kind": "discrete", "t_max": 60},
            perturbation={"kind": "eventually-constant", "onset": 1, "value": 1.0},
            diagnostics={"tprime_grid": [12, 15, 20, 25, 30, 35, 40, 45]})
        f = tmp_path / "s.json"
        f.write_text(json.dumps(data))
        assert main(["assume", "--scenario", str(f), "--quiet"]) == 0
        assert main(["assume", "--scenario", str(f), "--assert-uniform",
                     "--quiet"]) == 1

    def test_tmax_override(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code = main(["tvc", "--scenario",
                     str(SCENARIOS / "discrete-counterexample.json"),
                     "--tmax", "30", "--out", str(out)])
        assert code == 1
        report = json.loads(out.read_text())
        assert report["scenario"]["time"]["t_max"] == 30


class TestReports:
    def test_report_written_and_stable(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["euler", "--scenario",
                str(SCENARIOS / "discrete-counterexample.json")]
        main(args + ["--out", str(out1)])
        main(args + ["--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()
        report = json.loads(out1.read_text())
        assert report["euler"]["verdict"] == "STATIONARY"
        assert "tolerance" in report["euler"]

    def test_csv_matrix(self, tmp_path):
        data = minimal_scenario(
            time={"kind": "discrete", "t_max": 60},
            perturbation={"kind": "compact-support", "onset": 0, "cutoff": 10,
                          "value": 1.0},
            diagnostics={"tprime_grid": [12, 15, 20, 25]})
        f = tmp_path / "s.json"
        f.write_text(json.dumps(data))
        out = tmp_path / "m.csv"
        assert main(["assume", "--scenario", str(f), "--format", "csv",
                     "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("tprime,0.1,")
        assert len(lines) == 5

    def test_demo_reports_deterministic(self, tmp_path):
        for preset in ("discrete-counterexample", "assumption", "correspondence",
                       "household"):
            a, b = tmp_path / f"{preset}-a.json", tmp_path / f"{preset}-b.json"
            main(["demo", preset, "--seed", "7", "--out", str(a)])
            main(["demo", preset, "--seed", "7", "--out", str(b)])
            assert a.read_bytes() == b.read_bytes(), preset

    def test_demo_household_exit_0(self, tmp_path):
        assert main(["demo", "household", "--quiet"]) == 0

    def test_demo_counterexamples_exit_1(self):
        assert main(["demo", "discrete-counterexample", "--quiet"]) == 1
        assert main(["demo", "continuous-counterexample", "--quiet"]) == 1
