"""Exception hierarchy shared across the package."""


class SMCError(Exception):
    """Base class for every error raised by :mod:`smcresample`."""


class InvalidWeights(SMCError, ValueError):
    """Weights are empty, negative, non-finite, all zero, or not normalized."""


class InvalidCount(SMCError, ValueError):
    """A requested sample count is not a positive integer."""


class InvalidParams(SMCError, ValueError):
    """Model or filter parameters violate their constraints."""


class WeightCollapse(SMCError, FloatingPointError):
    """Every particle received zero likelihood at some step.

    ``step`` is the 1-based time index at which the collapse happened, or
    ``None`` when raised outside a filter run.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ParseError(SMCError, ValueError):
    """Input price file could not be read; ``row`` is the 1-based line number."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class InsufficientData(SMCError, ValueError):
    """Series too short for the requested computation."""


class WriteError(SMCError, OSError):
    """Output file could not be written."""


class UnsupportedModel(SMCError, ValueError):
    """The requested experiment needs a model feature that is not available."""
