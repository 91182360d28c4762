"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to, so that
operation errors surface as documented nonzero statuses.
"""


class TransDetectError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 70


class PreconditionError(TransDetectError, ValueError):
    """An operation was called with arguments violating its contract."""

    exit_code = 65


class FormatError(TransDetectError):
    """A file does not start with the expected container magic."""

    exit_code = 65


class TruncationError(FormatError):
    """A container payload is shorter than its header declares."""

    def __init__(self, path, expected: int, actual: int):
        self.path = path
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{path}: truncated payload, expected {expected} bytes, got {actual}"
        )


class UnsupportedFormatError(FormatError):
    """An image file uses a variant this reader does not handle."""


class InconsistencyError(TransDetectError):
    """Inputs that must agree (dimensions, fps) do not."""

    exit_code = 65


class CatalogError(TransDetectError, KeyError):
    """Unknown transition effect identifier."""

    exit_code = 65

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown effect"


class InvariantError(TransDetectError):
    """A structure violates one of its declared invariants."""

    exit_code = 65


class DetectorError(TransDetectError):
    """An external detector exited nonzero."""

    exit_code = 70

    def __init__(self, message: str, stderr: str = "", returncode: int | None = None):
        self.stderr = stderr
        self.returncode = returncode
        super().__init__(message)


class DetectorParseError(DetectorError):
    """An external detector printed something other than the expected JSON."""


class DetectorTimeoutError(DetectorError):
    """An external detector exceeded its deadline."""

    exit_code = 75


class PipelineError(TransDetectError):
    """A window of the sliding-window pipeline failed."""

    exit_code = 70

    def __init__(self, window_index: int, cause: Exception):
        self.window_index = window_index
        self.cause = cause
        super().__init__(f"window {window_index} failed: {cause}")
