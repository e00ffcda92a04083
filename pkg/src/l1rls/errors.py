"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid experiment, filter, or command configuration."""


class DegenerateCovarianceError(ValueError):
    """A covariance matrix is singular beyond what the fallbacks tolerate."""


class DegenerateSampleError(ValueError):
    """A sample matrix is unusable (too few rows or singular covariance)."""


class LinearSolveError(RuntimeError):
    """A symmetric positive definite solve failed."""


class NumericalFailureError(RuntimeError):
    """A recursion produced non-finite values.

    Carries where the failure happened so long Monte Carlo jobs can be
    diagnosed without re-running them.
    """

    def __init__(self, message, iteration=None, run=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        if run is not None:
            message = f"{message} (run {run})"
        super().__init__(message)
        self.iteration = iteration
        self.run = run
