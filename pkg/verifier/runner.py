"""End-to-end runs: solve every rung, trace the level iteration, compare with the bound.

Scenarios run concurrently; results come back in scenario order and every
artifact is written afterwards by a single writer, so outputs do not depend on
scheduling.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from core.params import lab_default
from logs.utils import audit_log
from measure.radon import total_mass
from solver.residual import Window, weak_residual
from solver.stepper import dirichlet_energy, solve
from wolff.potential import WolffQuery, format_value, wolff_potential
from wolff_lab.errors import SolverFailure, report_failure

from .verdict import VIOLATION, refinement_delta, verify_point

log = logging.getLogger("lab")

MODES = ("solve", "wolff", "km_trace", "verify")

FIELD_HEADER = ("t", "cell", "value")
STEPS_HEADER = ("scenario", "rung", "level", "iterations", "gradient_norm", "energy", "line_search_halvings")
WOLFF_HEADER = ("scenario", "source", "index", "x", "R", "p", "n", "value")
KM_HEADER = (
    "scenario", "rung", "point", "j", "rho_j", "l_j", "delta_j", "branch", "A_value", "gamma_j",
    "window_collapsed", "ball_mass", "claim_ratio", "split_ratio", "violation",
)
VERDICT_HEADER = (
    "scenario", "rung", "point", "y", "s", "rho", "u_value", "avg_term", "wolff_term", "bracket",
    "gamma_emp", "l_J", "delta0", "gamma_delta0", "max_gamma_j", "gamma_lJ", "dyadic_wolff",
    "terminal_ratio", "verdict", "u_delta", "bracket_delta", "gamma_delta", "refinement_stable",
)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    if isinstance(value, tuple):
        return " ".join(fmt(v) for v in value)
    return str(value)


@dataclass
class SolverChecks:
    min_value: float
    positivity_ok: bool | None
    energy_ok: bool | None
    residual: float

    def problems(self) -> list:
        """Messages for the checks that ran and failed."""
        found = []
        if self.positivity_ok is False:
            found.append(f"positivity lost: min u = {self.min_value:.6g}")
        if self.energy_ok is False:
            found.append("Dirichlet energy increased without sources")
        return found


@dataclass
class RungResult:
    index: int
    domain: object
    field: object
    checks: SolverChecks
    entries: list = field(default_factory=list)


@dataclass
class ScenarioResult:
    scenario: object
    rungs: list = field(default_factory=list)
    wolff_rows: list = field(default_factory=list)
    deltas: dict = field(default_factory=dict)
    failure: str | None = None
    solver_failure: bool = False

    def finest_violations(self):
        finest = self.scenario.finest
        return [e for r in self.rungs if r.index == finest for e in r.entries if e.verdict == VIOLATION]


@dataclass
class RunReport:
    mode: str
    results: list
    out_dir: Path

    @property
    def exit_code(self) -> int:
        failed = any(r.failure for r in self.results)
        flagged = any(r.finest_violations() for r in self.results)
        return 1 if failed or flagged else 0


def solver_checks(field, scenario) -> SolverChecks:
    params, domain = scenario.params, field.domain
    tol = 10 * params.tol_newton
    min_value = float(field.values.min())
    positivity = None
    if field.values[0].min() >= 0:
        positivity = min_value >= -tol
    energy = None
    if total_mass(scenario.measure) == 0:
        energies = [dirichlet_energy(field, params, k) for k in range(domain.n_levels)]
        energy = all(b <= a + tol * max(1.0, abs(a)) for a, b in zip(energies, energies[1:]))
    residual = weak_residual(field, scenario.measure, params, Window(domain.lower, domain.upper, 0.0, domain.t_final))
    return SolverChecks(min_value, positivity, energy, residual)


def wolff_rows(scenario):
    params, mu = scenario.params, scenario.measure
    rows = []
    for k, (x, R) in enumerate(scenario.wolff_queries):
        rows.append(("query", k, x, R, wolff_potential(mu, WolffQuery(x, R, params.p, params.n))))
    for k, point in enumerate(scenario.points):
        R = 2.0 * point.rho
        rows.append(("point", k, point.y, R, wolff_potential(mu, WolffQuery(point.y, R, params.p, params.n))))
    return rows


def run_scenario(scenario, mode="verify", rung=None) -> ScenarioResult:
    result = ScenarioResult(scenario)
    audit_log(f"Scenario started ({mode})", "info", scenario=scenario.name)
    try:
        if mode in ("wolff", "verify"):
            result.wolff_rows = wolff_rows(scenario)
        if mode == "wolff":
            audit_log("Scenario finished", "success", scenario=scenario.name)
            return result
        indices = range(len(scenario.rungs)) if rung is None else [rung % len(scenario.rungs)]
        if rung is not None:
            scenario.rung_domain(rung)
        for i in indices:
            domain = scenario.rung_domain(i)
            solved = solve(scenario.params, domain, scenario.measure, scenario.initial, scenario.boundary)
            rung_result = RungResult(i, domain, solved, solver_checks(solved, scenario))
            for problem in rung_result.checks.problems():
                log.warning("%s rung %d: %s", scenario.name, i, problem)
                audit_log("Solver check failed", "fail", scenario=scenario.name, extra=f"rung {i}: {problem}")
                result.failure = result.failure or f"rung {i}: {problem}"
            if mode in ("km_trace", "verify"):
                rung_result.entries = [verify_point(scenario, solved, k, rung=i) for k in range(len(scenario.points))]
            result.rungs.append(rung_result)
        if len(result.rungs) >= 2 and mode == "verify":
            coarse, fine = result.rungs[-2], result.rungs[-1]
            result.deltas = {k: refinement_delta(a, b) for k, (a, b) in enumerate(zip(coarse.entries, fine.entries))}
        if not result.failure:
            audit_log("Scenario finished", "success", scenario=scenario.name)
    except SolverFailure as exc:
        result.failure = report_failure(exc, scenario)
        result.solver_failure = True
    except Exception as exc:
        result.failure = report_failure(exc, scenario)
    return result


def run_scenarios(scenarios, mode="verify", rung=None, jobs=1) -> list:
    jobs = max(1, int(jobs or 1))
    if jobs == 1 or len(scenarios) <= 1:
        return [run_scenario(s, mode, rung) for s in scenarios]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda s: run_scenario(s, mode, rung), scenarios))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _field_rows(rung):
    for t, cell, value in rung.field.iter_rows():
        yield float(t), cell, float(value)


def _step_rows(results):
    for result in results:
        for rung in result.rungs:
            for r in rung.field.reports:
                yield (result.scenario.name, rung.index, r.level, r.iterations, r.gradient_norm, r.energy,
                       r.line_search_halvings)


def _wolff_csv_rows(results):
    for result in results:
        for source, k, x, R, value in result.wolff_rows:
            params = result.scenario.params
            yield result.scenario.name, source, k, x, R, params.p, params.n, format_value(value)


def _km_rows(results):
    for result in results:
        for rung in result.rungs:
            for entry in rung.entries:
                for st in entry.sequence.states:
                    yield (result.scenario.name, rung.index, entry.point_index, st.j, st.rho_j, st.l_j, st.delta_j,
                           st.branch, st.A_value, st.gamma_j, st.window_collapsed, st.ball_mass,
                           st.claim_ratio, st.split_ratio, st.violation)


def _verdict_rows(results):
    tolerance = lab_default("refinement_tolerance")
    for result in results:
        last = result.rungs[-1].index if result.rungs else None
        for rung in result.rungs:
            for entry in rung.entries:
                seq = entry.sequence
                delta = result.deltas.get(entry.point_index) if rung.index == last else None
                yield (
                    result.scenario.name, rung.index, entry.point_index, entry.y, entry.s, entry.rho,
                    entry.u_value, entry.avg_term, format_value(entry.wolff_term), format_value(entry.bracket),
                    entry.gamma_emp, seq.l_final, seq.delta0, seq.gamma_delta0, seq.max_gamma, seq.gamma_lJ,
                    seq.dyadic_wolff, seq.terminal_ratio, entry.verdict,
                    delta.u_delta if delta else None,
                    delta.bracket_delta if delta else None,
                    delta.gamma_delta if delta else None,
                    delta.stable(tolerance) if delta else None,
                )


def summary_lines(report: RunReport):
    tolerance = lab_default("refinement_tolerance")
    lines = [f"mode: {report.mode}", f"scenarios: {len(report.results)}"]
    for result in report.results:
        sc = result.scenario
        p = sc.params
        lines.append("")
        lines.append(f"[{sc.name}] n={p.n} p={fmt(p.p)} lambda={fmt(p.lam)} kappa={fmt(p.kappa)}")
        if result.failure:
            kind = "solver failure" if result.solver_failure else "failure"
            lines.append(f"  {kind}: {result.failure}")
        for source, k, x, R, value in result.wolff_rows:
            lines.append(f"  wolff {source}[{k}] x=({fmt(x)}) R={fmt(R)}: {format_value(value)}")
        for rung in result.rungs:
            c = rung.checks
            iterations = sum(r.iterations for r in rung.field.reports)
            lines.append(
                f"  rung {rung.index}: cells={rung.domain.cells_per_axis} dt={fmt(rung.domain.dt)} "
                f"newton={iterations} min_u={fmt(c.min_value)} positivity={fmt(c.positivity_ok) or '-'} "
                f"energy={fmt(c.energy_ok) or '-'} residual={fmt(c.residual)}"
            )
            for e in rung.entries:
                seq = e.sequence
                lines.append(
                    f"    point {e.point_index}: {e.verdict} u={fmt(e.u_value)} bracket={format_value(e.bracket)} "
                    f"gamma_emp={fmt(e.gamma_emp)} l_J={fmt(seq.l_final)} max_gamma_j={fmt(seq.max_gamma)} "
                    f"gamma_delta0={fmt(seq.gamma_delta0)} gamma_lJ={fmt(seq.gamma_lJ) or '-'} "
                    f"dyadic_wolff={fmt(seq.dyadic_wolff) or '-'}"
                )
        for k, delta in sorted(result.deltas.items()):
            state = "stable" if delta.stable(tolerance) else "UNSTABLE"
            lines.append(
                f"  refinement point {k}: u {fmt(delta.u_delta)} bracket {fmt(delta.bracket_delta)} "
                f"gamma {fmt(delta.gamma_delta)} km_gamma {fmt(delta.km_gamma_delta)} ({state})"
            )
    lines.append("")
    lines.append(f"exit: {report.exit_code}")
    return lines


def write_artifacts(report: RunReport):
    out = report.out_dir
    out.mkdir(parents=True, exist_ok=True)
    results, mode = report.results, report.mode
    if mode in ("solve", "verify"):
        (out / "fields").mkdir(exist_ok=True)
        for result in results:
            for rung in result.rungs:
                path = out / "fields" / f"{result.scenario.name}__rung{rung.index}.csv"
                _write_csv(path, FIELD_HEADER, _field_rows(rung))
    if mode in ("solve", "km_trace", "verify"):
        _write_csv(out / "steps.csv", STEPS_HEADER, _step_rows(results))
    if mode in ("wolff", "verify"):
        _write_csv(out / "wolff.csv", WOLFF_HEADER, _wolff_csv_rows(results))
    if mode in ("km_trace", "verify"):
        _write_csv(out / "km_trace.csv", KM_HEADER, _km_rows(results))
    if mode == "verify":
        _write_csv(out / "verdict.csv", VERDICT_HEADER, _verdict_rows(results))
    (out / "summary.txt").write_text("\n".join(summary_lines(report)) + "\n", encoding="utf-8")


def run(scenarios, out_dir, mode="verify", rung=None, jobs=1) -> RunReport:
    """Run `scenarios`, write the artifacts of `mode` under out_dir and return the report."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    results = run_scenarios(list(scenarios), mode, rung, jobs)
    report = RunReport(mode, results, Path(out_dir))
    write_artifacts(report)
    log.info("Run (%s) of %d scenario(s) finished with exit code %d", mode, len(results), report.exit_code)
    return report
