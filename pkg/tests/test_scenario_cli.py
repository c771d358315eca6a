from __future__ import annotations

import csv
import json

import numpy as np
import pytest
from helpers import bundled_text

from thermodelam.cli import run_cli
from thermodelam.errors import ConfigurationError, ScenarioParseError
from thermodelam.scenario import Expression, parse_scenario, reference_scenario, time_function
from thermodelam.stepper import run
from thermodelam.study import convergence_study, fitted_order

MINIMAL = """
[geometry]
dim = 2
extent = [1.0]
heights = [0.5, 0.5]
nodes = [6]
nodes_normal = [3, 3]
dirichlet = ["plus.left", "minus.left"]
[mixity]
a_I = 1.0
[time]
horizon = 0.2
tau = 0.1
"""


class TestDocument:
    def test_minimal(self):
        s = parse_scenario(MINIMAL, name="tiny")
        assert s.name == "tiny" and s.steps == 2
        assert s.coupling == "lagged" and s.gamma == 5.0
        tr = run(s)
        assert len(tr.ledger) == 3

    @pytest.mark.parametrize("name", ["peel", "static", "thermal", "pull", "shear", "opening"])
    def test_bundled_parse(self, name):
        assert reference_scenario(name).name == name

    def test_negative_heat_flux(self):
        text = MINIMAL + '[[loads.heat_flux]]\nface = "plus.top"\nvalue = -1.0\n'
        with pytest.raises(ConfigurationError, match="g >= 0"):
            parse_scenario(text)

    def test_heat_flux_dipping_negative(self):
        text = MINIMAL + '[[loads.heat_flux]]\nface = "plus.top"\nvalue = "cos(20 * t)"\n'
        with pytest.raises(ConfigurationError, match="g >= 0"):
            parse_scenario(text)

    def test_inertia_with_halfspace(self):
        text = MINIMAL.replace("[mixity]", "[material]\ndensity = 1.0\n[mixity]")
        with pytest.raises(ConfigurationError, match="linear subspace"):
            parse_scenario(text)

    def test_velocity_needs_density(self):
        text = MINIMAL + '[initial]\nvelocity = [0.0, "x"]\n'
        with pytest.raises(ConfigurationError, match="density"):
            parse_scenario(text)

    def test_toml_error_position(self):
        with pytest.raises(ScenarioParseError) as info:
            parse_scenario(MINIMAL.replace("tau = 0.1", "tau = = 0.1"))
        assert (info.value.line, info.value.column) == (13, 7)

    @pytest.mark.parametrize("text,match", [
        (MINIMAL.replace("[time]", "[time]\nspeed = 1"), "unknown keys"),
        (MINIMAL.replace("a_I = 1.0\n", ""), "a_I"),
        (MINIMAL.replace('dim = 2\n', 'dim = 2\nshape = "round"\n'), "unknown keys"),
    ])
    def test_structural_errors(self, text, match):
        with pytest.raises(ScenarioParseError, match=match):
            parse_scenario(text)

    def test_material_assumption_named(self):
        text = MINIMAL.replace("[mixity]", '[material]\nheat_capacity = { kind = "power", c0 = 1.0, omega = 1.1 }\n[mixity]')
        with pytest.raises(ConfigurationError, match="omega > 6/5"):
            parse_scenario(text)
        assert parse_scenario(text.replace("[mixity]", "strict = false\n[mixity]", 1)) is not None


class TestExpressions:
    def test_values(self):
        assert Expression("2 * ramp(t, 0, 2)")(t=0.5) == pytest.approx(0.5)
        assert Expression("step(t, 1) + max(t, 3)")(t=2.0) == pytest.approx(4.0)
        np.testing.assert_allclose(Expression("1 + x * y")(0.0, np.array([[2.0, 3.0]])), [7.0])

    @pytest.mark.parametrize("src", ["__import__('os')", "t.real", "[t]", "open('f')", "t if t else 1",
                                     "lambda: 1", "'a'", "u + 1"])
    def test_rejected(self, src):
        with pytest.raises(ScenarioParseError):
            Expression(src)

    def test_table(self):
        f = time_function({"table": [[0.0, 0.0], [1.0, 2.0]]}, "load")
        assert f(0.25) == pytest.approx(0.5) and f(5.0) == 2.0

    def test_table_needs_increasing_times(self):
        with pytest.raises(ScenarioParseError):
            time_function({"table": [[1.0, 0.0], [0.5, 2.0]]}, "load")

    def test_loads_cannot_depend_on_space(self):
        with pytest.raises(ScenarioParseError, match="position"):
            time_function("x * t", "traction")


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


PEEL_TINY = (bundled_text("peel").replace("nodes = [64]", "nodes = [12]")
             .replace("nodes_normal = [32, 32]", "nodes_normal = [6, 6]")
             .replace("horizon = 2.0", "horizon = 1.0"))


@pytest.fixture
def peel_file(tmp_path):
    p = tmp_path / "peel_tiny.toml"
    p.write_text(PEEL_TINY)
    return p


class TestCli:
    def test_tau_override(self, peel_file, tmp_path):
        out = tmp_path / "run"
        assert run_cli([str(peel_file), "--tau", "0.1", "--out", str(out), "--snapshots", "5"]) == 0
        rows = _read_csv(out / "ledger.csv")
        assert len(rows) == 10
        assert float(rows[-1]["t"]) == pytest.approx(1.0)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["steps_completed"] == 10 and summary["inequalities_hold"]
        assert summary["tau"] == 0.1
        assert sorted(p.name for p in out.glob("fields_*.csv")) == [
            "fields_0000.csv", "fields_0005.csv", "fields_0010.csv"]
        assert (out / "plot_ledger.py").exists()

    def test_exported_bonding_field(self, peel_file, tmp_path):
        out = tmp_path / "run"
        assert run_cli([str(peel_file), "--tau", "0.05", "--out", str(out), "--snapshots", "4"]) == 0
        history = []
        for path in sorted(out.glob("fields_*.csv")):
            z = [float(r["z"]) for r in _read_csv(path) if r["kind"] == "interface"]
            history.append(z)
        Z = np.array(history)
        assert Z.min() >= 0 and Z.max() <= 1
        assert np.all(np.diff(Z, axis=0) <= 0)

    def test_deterministic_ledger(self, peel_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli([str(peel_file), "--tau", "0.1", "--out", str(out), "--seed", "3"]) == 0
        assert (a / "ledger.csv").read_bytes() == (b / "ledger.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_sweep_on_thermal(self, tmp_path):
        text = bundled_text("thermal").replace("horizon = 1.0", "horizon = 0.4")
        p = tmp_path / "thermal_short.toml"
        p.write_text(text)
        out = tmp_path / "sweep"
        assert run_cli([str(p), "--sweep", "0.04,0.02,0.01", "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["levels"]) == 3 and len(summary["runs"]) == 3
        assert summary["orders"]["difference_w"] > 0.5
        assert (out / "tau_0.02" / "ledger.csv").exists()

    @pytest.mark.parametrize("argv", [["/nonexistent/scenario.toml"], ["static", "--sweep", "0.1,0.2,0.05"],
                                      ["static", "--sweep", "0.1,0.05"], ["static", "--tau", "-1"],
                                      ["static", "--snapshots", "0"], []])
    def test_usage_errors(self, argv, tmp_path):
        assert run_cli(argv + ["--out", str(tmp_path / "x")]) == 2

    def test_bundled_name(self, tmp_path):
        assert run_cli(["static", "--out", str(tmp_path / "s")]) == 0

    def test_step_failure_exit(self, tmp_path):
        text = (PEEL_TINY.replace("[time]", "[solver]\nmax_iter_u = 1\nfallback_iter = 1\n[time]"))
        p = tmp_path / "bad.toml"
        p.write_text(text)
        out = tmp_path / "bad"
        assert run_cli([str(p), "--tau", "0.1", "--out", str(out)]) == 1
        summary = json.loads((out / "summary.json").read_text())
        assert summary["failure"] is not None and summary["steps_completed"] == 0


class TestStudy:
    def test_fitted_order(self):
        taus = [0.4, 0.2, 0.1]
        assert fitted_order(taus, [0.16, 0.04, 0.01]) == pytest.approx(2.0)
        assert fitted_order(taus, [0.0, 0.0, 0.0]) is None

    def test_static_saturates(self):
        rep = convergence_study(reference_scenario("static"), [0.1, 0.05, 0.025])
        assert all(v is None for v in rep.orders.values())
        assert len(rep.levels) == 3

    def test_needs_three_levels(self):
        with pytest.raises(ValueError):
            convergence_study(reference_scenario("static"), [0.1, 0.05])
        with pytest.raises(ValueError):
            convergence_study(reference_scenario("static"), [0.1, 0.2, 0.05])
