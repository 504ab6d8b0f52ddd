"""Centralized audit logging helper.

The lab keeps an explicit audit trail (separate from the numerical `lab` log)
recording scenario-level events: runs started and finished, verdicts, VIOLATION
flags and failures. This helper is best-effort and must never raise: a
failure to write the trail must not abort a scenario.
"""

import logging

audit = logging.getLogger("audit")

STATUSES = ("success", "fail", "info")


def audit_log(action: str, status: str = "info", scenario: str | None = None, extra: str | None = None):
    """
        Write an audit record.

        - Best-effort, never raises.
        - `status` is one of: `success`, `fail`, `info`.
        - `extra` (if provided) is appended to the action message and truncated
            to keep one record per line.
    """
    try:
        if status not in STATUSES:
            status = "info"
        msg = action
        if extra:
            leftover = 255 - len(action) - 3
            msg = f"{action} ({extra[:max(0, leftover)]})"
        msg = msg.replace("\n", " ")[:255]

        level = logging.WARNING if status == "fail" else logging.INFO
        audit.log(level, "%s [%s] %s", scenario or "-", status, msg,
                  extra={"audit_status": status, "scenario": scenario})
    except Exception:
        # Never let the audit trail break a run.
        pass
