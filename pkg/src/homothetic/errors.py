"""Exception types shared by the library and the command-line harness."""


class ConfigurationError(ValueError):
    """Invalid parameters, geometry, or configuration input."""


class NumericalError(RuntimeError):
    """A linear solve, eigen-solve, or conditioning guard failed."""
