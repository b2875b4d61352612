"""Exception types shared across the package."""


class TorushuError(Exception):
    """Base class for library errors."""


class PreconditionError(TorushuError, ValueError):
    """An input violates the documented precondition of an operation."""


class CapExceededError(TorushuError, RuntimeError):
    """An enumeration or iteration cap was hit before the requested tolerance.

    ``partial`` holds the best result available at the cap (may be None).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SamplerStalledError(CapExceededError):
    """The determinantal sampler exceeded its rejection budget."""
