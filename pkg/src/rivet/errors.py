"""Exception hierarchy shared by the solvers and the command-line front end."""


class RivetError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(RivetError):
    """Invalid or incomplete run configuration.

    ``problems`` lists every violation found, not only the first one.
    """

    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InputError(RivetError):
    """Malformed input data (mesh files, boundary sets, ...)."""

    exit_code = 2


class SolverError(RivetError):
    """A linear or nonlinear solve failed."""

    exit_code = 3


class NonConvergenceError(SolverError):
    """An iteration hit its cap before reaching tolerance.

    Parameters
    ----------
    message : str
        Human readable description.
    history : sequence of float, optional
        Residual norms recorded by the failing loop.
    step : int, optional
        Index of the time step in which the failure happened.
    """

    def __init__(self, message, history=(), step=None, stage=None):
        self.history = list(history)
        self.step = step
        self.stage = stage
        super().__init__(message)

    @property
    def last_residual(self):
        return self.history[-1] if self.history else float("nan")


class ConstraintViolationError(SolverError):
    """A constrained sub-solve returned a point outside its admissible set."""


class RankOneSingularityError(SolverError):
    """Sherman-Morrison denominator vanished."""
