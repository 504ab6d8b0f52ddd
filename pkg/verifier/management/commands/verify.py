from ._base import LabCommand


class Command(LabCommand):
    help = (
        "Full run: solve each rung, evaluate Wolff potentials, trace the level iteration and "
        "write verdicts. Exits nonzero on a VIOLATION flag at the finest rung or any failure."
    )
    mode = "verify"
