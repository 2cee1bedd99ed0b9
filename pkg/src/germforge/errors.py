"""Exception hierarchy shared by every stage of the pipeline."""


class GermforgeError(Exception):
    """Base class; the CLI maps subclasses to distinct exit codes."""

    code = "error"


class MeshError(GermforgeError, ValueError):
    code = "mesh"


class HQDError(GermforgeError, ValueError):
    code = "hqd"


class SettingError(GermforgeError, ValueError):
    code = "setting"


class PoleAngleError(GermforgeError, ValueError):
    """A simple pole sits at a mark whose cone angle exceeds pi."""

    code = "pole-angle"


class InfeasibleError(GermforgeError):
    code = "infeasible"


class ConvergenceError(GermforgeError):
    """Newton stalled; ``solution`` holds the last iterate."""

    code = "non-convergence"

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class EigenSolverError(GermforgeError):
    code = "eigen"


class DegenerateTransportError(GermforgeError):
    code = "degenerate"
