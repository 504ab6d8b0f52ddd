from django.test import SimpleTestCase

from .utils import audit_log


class AuditLogTests(SimpleTestCase):
    def test_record_format(self):
        with self.assertLogs("audit", level="INFO") as logs:
            audit_log("Scenario finished", "success", scenario="atom-1d")
        self.assertEqual(logs.output, ["INFO:audit:atom-1d [success] Scenario finished"])

    def test_failures_are_warnings(self):
        with self.assertLogs("audit", level="WARNING") as logs:
            audit_log("Solver failure", "fail", scenario="x", extra="level 3")
        self.assertIn("Solver failure (level 3)", logs.output[0])

    def test_unknown_status_and_long_extra(self):
        with self.assertLogs("audit", level="INFO") as logs:
            audit_log("Run", "weird", extra="line\n" * 200)
        message = logs.records[0].getMessage()
        self.assertIn("[info]", message)
        self.assertNotIn("\n", message)

    def test_never_raises(self):
        audit_log(None, status=None, scenario=object(), extra=42)
