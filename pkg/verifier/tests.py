import dataclasses
import math
import tempfile
from unittest import mock
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.params import Domain, Params
from measure.radon import RadonMeasure
from solver.grid import GridField
from solver.stepper import solve
from wolff_lab.errors import ConfigError

from .config import load_scenarios, parse_scenarios
from .runner import VERDICT_HEADER, SolverChecks, fmt, run
from .verdict import (
    BOUNDED, VACUOUS, VIOLATION, empirical_gamma, relative_change, theorem_rhs_bracket, verify_point,
)

SCENARIOS = Path(__file__).resolve().parent / "scenarios"

ZERO_TOML = """
[[scenario]]
name = "zero"
n = 1
p = 3.0
lambda = 0.5

[scenario.domain]
side_length = 1.0
cells_per_axis = 8
t_final = 0.2
dt = 0.05

[[scenario.point]]
y = 0.5
s = 0.1
rho = 0.15
"""

VACUOUS_TOML = """
[[scenario]]
name = "atom-2d-p2"
n = 2
p = 2.0
lambda = 0.5

[scenario.domain]
side_length = 1.0
cells_per_axis = 8
t_final = 0.2
dt = 0.05

[[scenario.measure.atom]]
x = [0.5, 0.5]
mass = 0.5

[[scenario.point]]
y = [0.5, 0.5]
s = 0.1
rho = 0.15
"""


def read(path):
    return Path(path).read_text(encoding="utf-8")


class BracketTests(SimpleTestCase):
    def test_zero_data_gives_one(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        domain = Domain(side_length=1.0, cells_per_axis=8, t_final=0.2, dt=0.05)
        field = GridField.constant(domain, 1, 0.0)
        self.assertEqual(theorem_rhs_bracket(field, RadonMeasure.zero(1), ((0.5,), 0.1, 0.15), params), 1.0)

    def test_centered_atom_in_the_plane(self):
        # W of a unit atom at the center with n = 2, p = 3 is 2 (2ρ)^{1/2}.
        params = Params.from_settings(n=2, p=3.0, lam=0.5)
        domain = Domain(side_length=2.0, cells_per_axis=4, t_final=2.0, dt=1.0, lower=-1.0)
        field = GridField.constant(domain, 2, 0.0)
        mu = RadonMeasure.dirac((0.0, 0.0), 1.0)
        bracket = theorem_rhs_bracket(field, mu, ((0.0, 0.0), 1.0, 0.5), params)
        self.assertAlmostEqual(bracket, 3.0, places=12)

    def test_bracket_grows_with_the_measure(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        domain = Domain(side_length=1.0, cells_per_axis=8, t_final=0.2, dt=0.05)
        field = GridField.constant(domain, 1, 0.0)
        mu = RadonMeasure.dirac((0.4,), 1.0)
        point = ((0.5,), 0.1, 0.15)
        values = [theorem_rhs_bracket(field, mu.scaled(c), point, params) for c in (0.0, 0.5, 1.0, 4.0)]
        self.assertEqual(values, sorted(values))
        self.assertLess(values[0], values[-1])

    def test_divergent_potential_makes_the_bracket_infinite(self):
        params = Params.from_settings(n=2, p=2.0, lam=0.5)
        domain = Domain(side_length=1.0, cells_per_axis=8, t_final=0.2, dt=0.05)
        field = GridField.constant(domain, 2, 0.0)
        mu = RadonMeasure.dirac((0.5, 0.5), 1.0)
        self.assertTrue(math.isinf(theorem_rhs_bracket(field, mu, ((0.5, 0.5), 0.1, 0.15), params)))

    def test_empirical_gamma(self):
        self.assertEqual(empirical_gamma(2.0, 4.0), 0.5)
        self.assertEqual(empirical_gamma(-1.0, 4.0), 0.0)
        self.assertEqual(empirical_gamma(2.0, math.inf), 0.0)

    def test_relative_change(self):
        self.assertEqual(relative_change(0.0, 0.0), 0.0)
        self.assertAlmostEqual(relative_change(1.0, 1.25), 0.2)
        self.assertEqual(relative_change(math.inf, math.inf), 0.0)
        self.assertEqual(relative_change(1.0, math.inf), math.inf)


class ConfigTests(SimpleTestCase):
    def test_zero_scenario_loads(self):
        (scenario,) = parse_scenarios(ZERO_TOML)
        self.assertEqual(scenario.name, "zero")
        self.assertEqual(scenario.params.lam, 0.5)
        self.assertEqual(scenario.points[0].y, (0.5,))
        self.assertEqual(scenario.rungs, ((8, 0.05),))

    def test_bundled_configs_load(self):
        self.assertEqual(len(load_scenarios(SCENARIOS / "demo.toml")), 1)
        names = [s.name for s in load_scenarios(SCENARIOS / "suite.toml")]
        self.assertEqual(names, ["zero", "atom-1d", "atom-2d", "atom-2d-p2"])

    def test_empty_config(self):
        self.assertEqual(parse_scenarios(""), ())

    def test_unknown_key_is_named(self):
        text = ZERO_TOML.replace("dt = 0.05", "dt = 0.05\ndx = 0.1")
        with self.assertRaises(ConfigError) as ctx:
            parse_scenarios(text)
        self.assertIn("scenario[0].domain.dx", str(ctx.exception))

    def test_missing_lambda_is_named(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_scenarios(ZERO_TOML.replace("lambda = 0.5", ""))
        self.assertIn("scenario[0].lambda", str(ctx.exception))

    def test_syntax_error_reports_the_line(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_scenarios("[[scenario]]\nname = \n")
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn("line 2", str(ctx.exception))

    def test_point_must_fit_in_the_domain(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_scenarios(ZERO_TOML.replace("y = 0.5", "y = 0.1"))
        self.assertEqual(ctx.exception.key, "scenario[0].point[0]")

    def test_parameter_validation(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_scenarios(ZERO_TOML.replace("p = 3.0", "p = 1.5"))
        self.assertIn("p ≥ 2", str(ctx.exception))

    def test_duplicate_names(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_scenarios(ZERO_TOML + ZERO_TOML)
        self.assertEqual(ctx.exception.key, "scenario[1].name")

    def test_unknown_top_level_key(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_scenarios("title = 'x'\n" + ZERO_TOML)
        self.assertEqual(ctx.exception.key, "title")


class VerifyPointTests(SimpleTestCase):
    def test_zero_scenario_is_bounded(self):
        (scenario,) = parse_scenarios(ZERO_TOML)
        field = solve(scenario.params, scenario.domain, scenario.measure, scenario.initial, scenario.boundary)
        entry = verify_point(scenario, field, 0)
        self.assertEqual(entry.verdict, BOUNDED)
        self.assertEqual(entry.gamma_emp, 0.0)
        self.assertEqual(entry.bracket, 1.0)
        self.assertFalse(entry.sequence.has_violation)

    def test_atom_at_the_point_in_the_plane_with_p_two_is_vacuous(self):
        (scenario,) = parse_scenarios(VACUOUS_TOML)
        field = solve(scenario.params, scenario.domain, scenario.measure, scenario.initial, scenario.boundary)
        entry = verify_point(scenario, field, 0)
        self.assertEqual(entry.verdict, VACUOUS)
        self.assertTrue(math.isinf(entry.wolff_term))
        self.assertIsNone(entry.sequence.gamma_lJ)

    def test_tiny_cap_flags_a_violation(self):
        (scenario,) = load_scenarios(SCENARIOS / "demo.toml")
        scenario = dataclasses.replace(scenario, params=scenario.params.replace(gamma_cap=1e-6))
        field = solve(scenario.params, scenario.domain, scenario.measure)
        entry = verify_point(scenario, field, 0)
        self.assertGreater(entry.u_value, 0.0)
        self.assertEqual(entry.verdict, VIOLATION)


class RunTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def write_config(self, text, name="config.toml"):
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    def test_fmt(self):
        self.assertEqual(fmt(0.1), "0.10000000000000001")
        self.assertEqual(fmt(True), "1")
        self.assertEqual(fmt(None), "")
        self.assertEqual(fmt((0.5, 0.25)), "0.5 0.25")

    def test_empty_config_writes_a_header_only_verdict(self):
        out = self.dir / "out"
        call_command("verify", self.write_config(""), out=str(out))
        self.assertEqual(read(out / "verdict.csv"), ",".join(VERDICT_HEADER) + "\n")
        self.assertIn("exit: 0", read(out / "summary.txt"))

    def test_malformed_config_fails_naming_the_key(self):
        path = self.write_config(ZERO_TOML.replace("cells_per_axis = 8", "cells = 8"))
        with self.assertRaises(CommandError) as ctx:
            call_command("verify", path, out=str(self.dir / "out"))
        self.assertIn("scenario[0].domain.cells", str(ctx.exception))

    def test_missing_rung_fails(self):
        with self.assertRaises(CommandError):
            call_command("verify", self.write_config(ZERO_TOML), out=str(self.dir / "out"), rung=3)

    def test_demo_config(self):
        out = self.dir / "demo"
        call_command("verify", str(SCENARIOS / "demo.toml"), out=str(out))
        rows = read(out / "verdict.csv").splitlines()
        self.assertEqual(len(rows), 3)
        self.assertTrue(all(row.split(",")[VERDICT_HEADER.index("verdict")] == BOUNDED for row in rows[1:]))
        self.assertTrue((out / "fields" / "atom-1d__rung0.csv").exists())
        self.assertTrue((out / "fields" / "atom-1d__rung1.csv").exists())
        self.assertGreater(len(read(out / "km_trace.csv").splitlines()), 1)

    def test_wolff_mode_only_evaluates_potentials(self):
        out = self.dir / "wolff"
        call_command("wolff", str(SCENARIOS / "demo.toml"), out=str(out))
        rows = read(out / "wolff.csv").splitlines()
        self.assertEqual(rows[0], "scenario,source,index,x,R,p,n,value")
        self.assertEqual(rows[1].split(",")[5:7], ["3", "1"])
        # unit atom at the center with n = 1, p = 3: W(x, R) = R
        self.assertAlmostEqual(float(rows[1].split(",")[-1]), 0.4, places=12)
        self.assertFalse((out / "verdict.csv").exists())

    def test_violation_sets_the_exit_code(self):
        (scenario,) = parse_scenarios(ZERO_TOML + "\n[[scenario.measure.atom]]\nx = 0.5\nmass = 1.0\n")
        scenario = dataclasses.replace(scenario, params=scenario.params.replace(gamma_cap=1e-9))
        report = run([scenario], self.dir / "out")
        self.assertEqual(report.exit_code, 1)
        self.assertIn(VIOLATION, read(self.dir / "out" / "summary.txt"))

    def test_runs_are_reproducible(self):
        scenarios = parse_scenarios(ZERO_TOML) + load_scenarios(SCENARIOS / "demo.toml")
        first = run(scenarios, self.dir / "a", jobs=1)
        second = run(scenarios, self.dir / "b", jobs=2)
        self.assertEqual(first.exit_code, 0)
        for name in ("verdict.csv", "km_trace.csv", "steps.csv", "wolff.csv", "summary.txt"):
            self.assertEqual(read(self.dir / "a" / name), read(self.dir / "b" / name), name)

    def test_solver_invariants_hold_on_the_suite(self):
        report = run(load_scenarios(SCENARIOS / "suite.toml"), self.dir / "suite", mode="solve")
        self.assertEqual(report.exit_code, 0)
        for result in report.results:
            for rung in result.rungs:
                with self.subTest(scenario=result.scenario.name, rung=rung.index):
                    self.assertIsNot(rung.checks.positivity_ok, False)
                    self.assertIsNot(rung.checks.energy_ok, False)
        self.assertTrue(report.results[0].rungs[0].checks.energy_ok)
        self.assertFalse((self.dir / "suite" / "verdict.csv").exists())

    def test_suite_verifies_within_the_caps_and_refines_stably(self):
        report = run(load_scenarios(SCENARIOS / "suite.toml"), self.dir / "suite")
        self.assertEqual(report.exit_code, 0)
        tolerance = 0.25
        for result in report.results:
            cap = result.scenario.params.gamma_cap
            self.assertIsNone(result.failure)
            for rung in result.rungs:
                for entry in rung.entries:
                    with self.subTest(scenario=result.scenario.name, rung=rung.index, point=entry.point_index):
                        self.assertNotEqual(entry.verdict, VIOLATION)
                        self.assertLess(entry.gamma_emp, cap)
                        self.assertLess(entry.sequence.max_gamma, cap)
                        self.assertLess(entry.sequence.gamma_delta0, cap)
            if len(result.scenario.rungs) >= 2:
                self.assertTrue(result.deltas)
                for k, delta in result.deltas.items():
                    with self.subTest(scenario=result.scenario.name, point=k):
                        self.assertTrue(delta.stable(tolerance), delta)
        two_d = next(r for r in report.results if r.scenario.name == "atom-2d")
        self.assertEqual(len(two_d.rungs), 2)

    def test_failed_solver_check_sets_the_exit_code(self):
        (scenario,) = parse_scenarios(ZERO_TOML)
        broken = SolverChecks(min_value=-1.0, positivity_ok=False, energy_ok=None, residual=0.0)
        with mock.patch("verifier.runner.solver_checks", return_value=broken), \
                self.assertLogs("audit", level="WARNING") as logs:
            report = run([scenario], self.dir / "out", mode="solve")
        self.assertEqual(report.exit_code, 1)
        self.assertIn("positivity lost", report.results[0].failure)
        self.assertTrue(any("Solver check failed" in line for line in logs.output))

    def test_solver_check_messages(self):
        self.assertEqual(SolverChecks(0.0, True, None, 0.0).problems(), [])
        self.assertEqual(SolverChecks(0.0, None, None, 0.0).problems(), [])
        problems = SolverChecks(-0.5, False, False, 0.0).problems()
        self.assertEqual(len(problems), 2)
        self.assertIn("energy", problems[1])
