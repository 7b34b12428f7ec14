"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class TodkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(TodkitError, ValueError):
    """A domain object violates its invariants."""


class SchemaError(TodkitError, ValueError):
    """An on-disk record violates the canonical schema.

    Carries file coordinates so CLI diagnostics can name the offending
    record.
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class AdapterError(TodkitError, ValueError):
    """Unknown or unusable corpus adapter."""


class CapabilityError(TodkitError, ValueError):
    """A task was requested that the corpus annotation mask does not cover."""


class TrainingError(TodkitError, RuntimeError):
    """Optimization failed; carries epoch/batch coordinates when known."""

    def __init__(self, message: str, *, epoch: int | None = None, batch: int | None = None):
        self.epoch = epoch
        self.batch = batch
        where = ""
        if epoch is not None:
            where = f"epoch {epoch}" + (f", batch {batch}" if batch is not None else "")
            where = f"[{where}] "
        super().__init__(where + message)


class CheckpointError(TodkitError, RuntimeError):
    """Checkpoint container is unreadable or inconsistent with the caller."""


class TransportError(TodkitError, ConnectionError):
    """Remote backend could not be reached or the connection failed."""


class TransportTimeout(TransportError):
    """Remote backend did not answer within the configured timeout."""


class ProtocolError(TodkitError, RuntimeError):
    """Remote backend spoke a different wire-protocol version or sent garbage."""
