"""Exception types raised across the package.

Everything derives from EntfixError so callers can catch the whole family;
ValueError mixins mark plain precondition failures.
"""

from __future__ import annotations


class EntfixError(Exception):
    """Base class for all package-specific errors."""


# --- corpus ---------------------------------------------------------------

class FileUnreadableError(EntfixError):
    """A corpus file could not be opened or decoded."""


class MalformedRecordError(EntfixError):
    """A line was not a JSON object with the required fields."""

    def __init__(self, lineno: int, detail: str):
        super().__init__(f"line {lineno}: {detail}")
        self.lineno = lineno
        self.detail = detail


class DuplicateIdError(EntfixError):
    """Two records in one file share an id."""

    def __init__(self, example_id: str, lineno: int):
        super().__init__(f"duplicate id {example_id!r} at line {lineno}")
        self.example_id = example_id
        self.lineno = lineno


class RecordWriteError(EntfixError):
    """A record could not be serialized or written."""

    def __init__(self, index: int, detail: str):
        super().__init__(f"record {index}: {detail}")
        self.index = index


# --- contrast / detection -------------------------------------------------

class MissingReferenceError(EntfixError):
    """An operation needing gold references met an example without one."""

    def __init__(self, example_id: str):
        super().__init__(f"example {example_id!r} has no reference summary")
        self.example_id = example_id


# --- ranker ---------------------------------------------------------------

class SchemaMismatchError(EntfixError):
    """A feature vector does not match the model's feature schema."""


class EmptyTrainingSetError(EntfixError, ValueError):
    """fit() was called with no training pairs."""


class NonFiniteLossError(EntfixError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, step: int):
        super().__init__(f"non-finite loss at optimization step {step}")
        self.step = step


class SchemaVersionError(EntfixError):
    """A model file declares an unsupported format version."""


class CorruptModelError(EntfixError):
    """A model file could not be parsed or is missing fields."""


# --- wire protocol --------------------------------------------------------

class ProtocolError(EntfixError):
    """Base class for external recognizer/scorer endpoint failures."""


class EndpointUnreachableError(ProtocolError):
    """The endpoint process or socket could not be reached."""


class RequestTimeoutError(ProtocolError):
    """No response arrived within the configured budget."""


class ProtocolViolationError(ProtocolError):
    """The endpoint sent something outside the wire contract."""


class CountMismatchError(ProtocolViolationError):
    """A scorer returned the wrong number of scores."""


# --- eval -----------------------------------------------------------------

class MissingGoldFlagError(EntfixError):
    """An outcome's example id has no entry in the gold flag table."""

    def __init__(self, example_id: str):
        super().__init__(f"no gold flag for example {example_id!r}")
        self.example_id = example_id


class EmptyOutcomesError(EntfixError, ValueError):
    """A metric over outcomes received an empty sequence."""


class EmptyLabelsError(EntfixError, ValueError):
    """bootstrap_ci received no labels."""


class AllZeroCountsError(EntfixError, ValueError):
    """Precision/recall requested over tp = fp = fn = 0."""


# --- config / cli ---------------------------------------------------------

class ConfigError(EntfixError):
    """The pipeline config file is missing, malformed, or inconsistent."""
