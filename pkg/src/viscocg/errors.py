"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class UnsupportedKernelError(TypeError):
    """Operation not available for the given kernel family."""


class NumericalError(RuntimeError):
    """A numerical procedure broke down (solve failure, nonfinite values)."""


class StateError(RuntimeError):
    """Solver or history state is inconsistent with the requested operation."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""
