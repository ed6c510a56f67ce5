"""Exception types shared across the package."""

from __future__ import annotations


class SinrError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(SinrError, ValueError):
    """A file or stream does not match the expected format.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ValidationError(SinrError, ValueError):
    """An argument or data structure violates a documented precondition."""


class ConvergenceError(SinrError, RuntimeError):
    """An iterative procedure failed to converge.

    ``last_iterate`` holds the final state so callers can inspect or reuse it.
    """

    def __init__(self, message: str, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)
