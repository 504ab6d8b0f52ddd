import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from verifier.config import load_scenarios
from verifier.runner import run
from wolff_lab.errors import ConfigError, report_failure

log = logging.getLogger("lab")


class LabCommand(BaseCommand):
    """Shared options and exit handling for the scenario commands."""

    mode = None
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument("config", help="TOML scenario file")
        parser.add_argument("--out", default="out", help="Output directory (default: ./out)")
        parser.add_argument("--rung", type=int, default=None, help="Run only this refinement rung")
        parser.add_argument("--seed", type=int, default=0,
                            help="Seed for randomized property suites; scenario runs are deterministic")
        parser.add_argument("--jobs", type=int, default=1, help="Scenarios solved concurrently")

    def handle(self, *args, **options):
        try:
            scenarios = load_scenarios(options["config"])
        except ConfigError as exc:
            raise CommandError(report_failure(exc), returncode=1)
        log.info("%s: %d scenario(s), seed %d", self.mode, len(scenarios), options["seed"])

        report = run(scenarios, Path(options["out"]), mode=self.mode, rung=options["rung"], jobs=options["jobs"])

        for result in report.results:
            if result.failure:
                self.stderr.write(self.style.ERROR(f"{result.scenario.name}: {result.failure}"))
            for entry in result.finest_violations():
                self.stderr.write(self.style.WARNING(
                    f"{result.scenario.name}: VIOLATION at point {entry.point_index} (γ_emp = {entry.gamma_emp:.6g})"
                ))
        self.stdout.write(f"Wrote {self.mode} artifacts for {len(report.results)} scenario(s) to {report.out_dir}")
        if report.exit_code:
            raise CommandError("run finished with failures or VIOLATION flags", returncode=report.exit_code)
