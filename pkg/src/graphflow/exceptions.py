"""Exception types raised across the package."""


class GraphflowError(Exception):
    """Base class for package errors."""


class ConfigurationError(GraphflowError, ValueError):
    """Invalid parameters for a generator, diffusion model, method or experiment."""


class ParseError(GraphflowError, ValueError):
    """Malformed input text. ``lineno`` is 1-based, or None when not line-oriented."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class CapacityError(GraphflowError, ValueError):
    """Instance too large for an exact (enumeration-based) routine."""


class UnsupportedModelError(GraphflowError, ValueError):
    """Operation does not support the requested diffusion model."""


class DegenerateError(GraphflowError, ValueError):
    """Input admits no meaningful answer (e.g. every eccentricity is infinite)."""
