"""Exception types shared across the package."""


class CcprobeError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(CcprobeError):
    """A config object or scenario violates its invariants."""


class ProtocolError(CcprobeError):
    """An endpoint was driven outside its contract."""


class InternalError(CcprobeError):
    """Impossible state reached (timer misuse, event-queue corruption)."""


class TraceIOError(CcprobeError):
    """Base class for trace (de)serialization failures."""


class TraceParseError(TraceIOError):
    """A trace line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class TraceOrderError(TraceIOError):
    """Parsed events are not sorted by timestamp."""
