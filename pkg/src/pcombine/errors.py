"""Exception hierarchy shared by every module."""


class PCombineError(Exception):
    """Base class for all errors raised by :mod:`pcombine`."""


class DomainError(PCombineError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class UnsupportedKindError(DomainError):
    """The combiner/threshold pairing is not defined."""


class UsageError(PCombineError, ValueError):
    """Inconsistent inputs, e.g. a statistic paired with a threshold for another K."""


class NumericalError(PCombineError, ArithmeticError):
    """A quadrature or root-finding routine failed to meet its tolerance.

    ``estimate`` carries the achieved error estimate (or residual) when known.
    """

    def __init__(self, message, estimate=None, diagnostics=None):
        super().__init__(message)
        self.estimate = estimate
        self.diagnostics = dict(diagnostics or {})


class SolverError(NumericalError):
    """A bracketed root search could not bracket or converge."""


class InputError(PCombineError, ValueError):
    """Malformed input file or configuration.  ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.path = path
