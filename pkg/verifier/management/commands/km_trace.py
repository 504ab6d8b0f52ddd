from ._base import LabCommand


class Command(LabCommand):
    help = "Solve, then trace the level iteration (one CSV row per step j) at every verification point."
    mode = "km_trace"
