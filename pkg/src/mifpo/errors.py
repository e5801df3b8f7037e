"""Exception hierarchy shared by all modules."""


class MifpoError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MifpoError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(MifpoError, ValueError):
    """Array dimensions do not agree with the instance they are used with."""


class DataError(MifpoError, ValueError):
    """Input data (CSV, JSON) could not be parsed or failed validation."""


class SolverError(MifpoError, RuntimeError):
    """An optimisation routine failed to produce a usable answer."""


class LpNumericalError(SolverError):
    """The simplex method lost too much precision to certify its result."""


class BudgetError(MifpoError, RuntimeError):
    """The brute-force oracle was asked to do more work than its budget allows."""
