"""Exception hierarchy shared by the library and the CLI."""


class TomographyError(Exception):
    """Base class for domain failures (CLI exit code 1)."""


class DimensionError(TomographyError, ValueError):
    pass


class DegenerateInputError(TomographyError, ValueError):
    pass


class InvalidStateError(TomographyError, ValueError):
    pass


class ChannelValidationError(TomographyError):
    pass


class TimeDomainError(TomographyError, ValueError):
    """Evaluation time is negative or outside a tabulated range."""


class DecompositionError(TomographyError):
    """The collected basis fails to reproduce D(t) at some time."""

    def __init__(self, message, time=None, residual=None):
        super().__init__(message)
        self.time = time
        self.residual = residual


class SolvabilityError(TomographyError):
    """The lambda-matrix system cannot be solved for the projections."""


class DegenerateSignalsError(TomographyError):
    pass


class IncompleteFrameError(TomographyError):
    """Frame operators do not span the operator space."""

    def __init__(self, message, span_dimension, deficit):
        super().__init__(message)
        self.span_dimension = span_dimension
        self.deficit = deficit


class DegenerateTimesError(TomographyError, ValueError):
    """Closed-form inversion divides by ``exp(-gamma t) - 1 = 0``."""
