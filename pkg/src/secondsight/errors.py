"""Typed error hierarchy shared by every layer.

Each error carries a stable machine-readable ``code`` so the HTTP gateway
and CLI can map failures without string matching.
"""

from __future__ import annotations


class SecondSightError(Exception):
    """Base for all domain errors raised by this package."""

    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


class ValidationError(SecondSightError):
    """A value violates a domain-type invariant at construction."""

    code = "VALIDATION_ERROR"


class MissingField(ValidationError):
    code = "MISSING_FIELD"


class InvalidTimezone(ValidationError):
    code = "INVALID_TIMEZONE"


class StreamUnreadable(SecondSightError):
    """The input stream itself could not be read (I/O failure)."""

    code = "STREAM_UNREADABLE"


class AllStreamsEmpty(SecondSightError):
    """Alignment was asked to build a grid with no data in any modality."""

    code = "ALL_STREAMS_EMPTY"


class NoPhysioData(SecondSightError):
    """Baseline statistics requested but no physiological summaries exist."""

    code = "NO_PHYSIO_DATA"


class UnknownSession(SecondSightError):
    code = "UNKNOWN_SESSION"


class DuplicateSession(SecondSightError):
    code = "DUPLICATE_SESSION"


class ConsentDisabled(SecondSightError):
    """Capture is opted out (or the modality is disabled) for this session."""

    code = "CONSENT_DISABLED"


class SessionFinalized(SecondSightError):
    """Raw ingestion attempted after the session was finalized."""

    code = "SESSION_FINALIZED"


class OutOfOrderAppend(SecondSightError):
    """Appended records are unsorted, duplicated, or behind the stored max."""

    code = "OUT_OF_ORDER_APPEND"


class InvalidRange(SecondSightError):
    code = "INVALID_RANGE"


class UnparsableQuery(SecondSightError):
    """Query text was empty after trimming; the grammar otherwise always parses."""

    code = "UNPARSABLE_QUERY"


class ArchiveCorrupt(SecondSightError):
    """A records file contains an unparseable non-tail line."""

    code = "ARCHIVE_CORRUPT"


class BindFailure(SecondSightError):
    """The HTTP service could not bind its configured address."""

    code = "BIND_FAILURE"
