"""Exception types shared across fluxtrap."""


class FluxtrapError(Exception):
    pass


class DomainError(FluxtrapError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(FluxtrapError, RuntimeError):
    """A numerical procedure failed to reach its tolerance.

    The best available estimate and its error bound are attached.
    """

    def __init__(self, message, estimate=None, error=None, **diagnostics):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.diagnostics = diagnostics


class ConfigurationError(FluxtrapError, ValueError):
    """Inconsistent parameters handed to a construction (trial functions, grids)."""


class BracketError(FluxtrapError, ValueError):
    """A root/transition bracket does not contain a sign change."""
