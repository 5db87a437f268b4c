"""Exception hierarchy shared by all modules."""


class PhtShellError(Exception):
    """Base class for package errors."""


class ConfigurationError(PhtShellError, ValueError):
    """Invalid run parameters, case definitions or config files."""


class UsageError(PhtShellError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class DegenerateGeometryError(PhtShellError, ArithmeticError):
    """The mid-surface or shell map is singular at a sampled point."""


class SolverError(PhtShellError, RuntimeError):
    """The linear system could not be solved to the required residual."""


class ConsistencyError(PhtShellError, RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""
