"""Exception types shared across the toolkit.

The CLI maps ``ToolkitError`` to exit code 1 (user/input error); anything
else is an internal failure (exit 2).
"""


class ToolkitError(Exception):
    """Base class for all errors raised deliberately by this package."""


class DataFormatError(ToolkitError):
    """A file or record does not conform to a documented format."""


class InsufficientDataError(ToolkitError):
    """Not enough records to honor the requested counts or class balance."""


class EmptyTextError(ToolkitError):
    """Text normalizes to zero tokens."""


class InvalidInputError(ToolkitError):
    """Arguments violate an operation's contract (width, span, prompt, ...)."""
