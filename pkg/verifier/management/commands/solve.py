from ._base import LabCommand


class Command(LabCommand):
    help = "Solve every rung of every scenario and dump the discrete fields."
    mode = "solve"
