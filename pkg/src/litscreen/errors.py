"""Exception types shared across the package."""

from __future__ import annotations


class LitscreenError(Exception):
    """Base class for all package errors."""


class IngestError(LitscreenError):
    """Raised when an input stream cannot be ingested at all.

    Carries the byte offset at which decoding/parsing gave up.
    """

    def __init__(self, message: str, byte_offset: int = 0):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class InvalidTemplateError(LitscreenError):
    """Raised when a prompt template violates its invariants."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid template: " + "; ".join(violations))
        self.violations = violations


class TransportError(LitscreenError):
    """A network-level failure talking to an external endpoint.

    retryable distinguishes transient conditions (timeouts, 429, 5xx) from
    permanent ones; retry_after carries a server-provided backoff hint in
    seconds when one was sent.
    """

    def __init__(self, message: str, retryable: bool = True, retry_after: float | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.retry_after = retry_after


class DoiError(LitscreenError):
    """Raised for syntactically invalid DOIs."""


class DoiNotFoundError(LitscreenError):
    """Raised when the metadata resolver does not know the DOI."""


class CoverageError(LitscreenError):
    """Raised when an operation needs a complete verdict matrix but pairs are missing."""

    def __init__(self, missing: list[tuple[str, str]]):
        preview = ", ".join(f"({p}, {a})" for p, a in missing[:10])
        more = "" if len(missing) <= 10 else f" and {len(missing) - 10} more"
        super().__init__(f"missing decisions for {len(missing)} (paper, agent) pairs: {preview}{more}")
        self.missing = missing


class NotFoundError(LitscreenError):
    """Raised when a referenced entity does not exist in the store."""


class ConflictError(LitscreenError):
    """Raised when an operation collides with existing state (e.g. a held run lease)."""
