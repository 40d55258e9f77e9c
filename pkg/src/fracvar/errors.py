"""Exception types raised by the library."""


class FracvarError(Exception):
    """Base class for library errors."""


class GridError(FracvarError, ValueError):
    """Invalid grid construction or mismatched grids."""


class NonFiniteError(FracvarError, ValueError):
    """A sampled or evaluated quantity is NaN or infinite.

    ``node`` holds the multi-index of the first offending node when known.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class OrderError(FracvarError, ValueError):
    """Fractional order outside (0, 1]."""


class SolverError(FracvarError, RuntimeError):
    """Linear solve could not be carried out."""
