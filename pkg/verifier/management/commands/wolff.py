from ._base import LabCommand


class Command(LabCommand):
    help = "Evaluate the truncated Wolff potential at the configured queries and verification points."
    mode = "wolff"
