"""Exception types shared across the package."""


class ReplayBenchError(Exception):
    """Base class for all package errors."""


class ParseError(ReplayBenchError):
    """Input document is not well-formed."""


class InvariantError(ReplayBenchError):
    """Input parsed but violates a declared invariant."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class ProtocolError(ReplayBenchError):
    """Bridge wire-protocol violation."""


class PolicyFault(ReplayBenchError):
    """Policy failed mid-episode (timeout, disconnect, bad reply)."""
