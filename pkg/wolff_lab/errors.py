# wolff_lab/errors.py
"""Exception hierarchy and failure reporting.

Failures are reported the same way everywhere: one line to the `lab` logger,
one entry in the audit trail, and a short message for the caller. Tracebacks
stay in the log file.
"""

import logging

from logs.utils import audit_log

log = logging.getLogger("lab")


class LabError(Exception):
    """Base class for every failure raised by the lab."""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain of an operation (radius, window, containment)."""


class SolverFailure(LabError):
    """The inner Newton solve of a time step did not converge."""

    def __init__(self, message, *, time_level=None, gradient_norm=None, iterations=None):
        super().__init__(message)
        self.time_level = time_level
        self.gradient_norm = gradient_norm
        self.iterations = iterations


class SelectionFailure(LabError):
    """A_j(l) did not fall below κ within the allowed number of doublings."""


class ConfigError(LabError):
    """A scenario config could not be read or cleaned. `key` names the offending entry."""

    def __init__(self, message, *, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line

    def __str__(self):
        msg = super().__str__()
        if self.key:
            msg = f"{self.key}: {msg}"
        if self.line is not None:
            msg = f"{msg} (line {self.line})"
        return msg


def report_failure(exc, scenario=None):
    """Log and audit a failure, then return the message shown to the user."""
    name = getattr(scenario, "name", scenario)
    if isinstance(exc, SolverFailure):
        log.error("Solver failure in %s: %s (gradient norm %s)", name, exc, exc.gradient_norm)
        audit_log("Solver failure", "fail", scenario=name, extra=str(exc))
    elif isinstance(exc, ConfigError):
        log.warning("Config error: %s", exc)
        audit_log("Config rejected", "fail", scenario=name, extra=str(exc))
    elif isinstance(exc, LabError):
        log.warning("%s in %s: %s", type(exc).__name__, name, exc)
        audit_log(type(exc).__name__, "fail", scenario=name, extra=str(exc))
    else:
        log.exception("Unexpected failure in %s", name)  # traceback goes to the log file
        audit_log("Unexpected failure", "fail", scenario=name, extra=type(exc).__name__)
        return f"internal error ({type(exc).__name__}); see the lab log"
    return str(exc)
