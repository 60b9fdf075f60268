"""Exception hierarchy shared by every powerprof module."""

from __future__ import annotations


class PowerprofError(Exception):
    """Base class for all errors raised by powerprof."""


# energy sources
class SourceUnavailable(PowerprofError):
    pass


class PermissionDenied(PowerprofError, PermissionError):
    pass


class MalformedReplayFile(PowerprofError, ValueError):
    pass


class ReadFailure(PowerprofError, OSError):
    pass


class ReplayExhausted(PowerprofError):
    """Raised by a replay source after its last row; a normal stop condition."""


class DomainMismatch(PowerprofError, ValueError):
    pass


class NonMonotonicTime(PowerprofError, ValueError):
    pass


# collection and traces
class ZeroInterval(PowerprofError, ValueError):
    pass


class EmptyTrace(PowerprofError):
    def __init__(self, message: str = "trace has no samples", wall_time: float | None = None):
        super().__init__(message)
        self.wall_time = wall_time


class MalformedTrace(PowerprofError, ValueError):
    pass


# statistics
class EmptySeries(PowerprofError, ValueError):
    pass


class EmptyList(PowerprofError, ValueError):
    pass


# reports
class NoTraces(PowerprofError):
    pass


class MalformedReport(PowerprofError, ValueError):
    pass


class IncompatibleVersion(PowerprofError, ValueError):
    pass


# runner and kernels
class SpawnFailure(PowerprofError):
    pass


class InvalidSpec(PowerprofError, ValueError):
    pass


class OracleMismatch(PowerprofError):
    pass
