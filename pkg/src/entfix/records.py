"""Corpus I/O: newline-delimited JSON records, one object per line.

An example record holds the required fields ``id``, ``document`` and
``summary`` plus optional ``reference`` (gold summary) and ``metadata``
(flat string map). Blank lines are ignored. Duplicate ids are always an
error, even in lenient mode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .errors import (
    DuplicateIdError,
    FileUnreadableError,
    MalformedRecordError,
    RecordWriteError,
)

SCHEMA_VERSION = "1"

# line separators json.dumps(ensure_ascii=False) leaves unescaped
_LINE_BREAKS = {0x85: "\\u0085", 0x2028: "\\u2028", 0x2029: "\\u2029"}


@dataclass(frozen=True)
class Example:
    """One document/summary pair, optionally with a gold reference."""

    id: str
    document: str
    summary: str
    reference: str | None = None
    metadata: dict[str, str] | None = None

    def __post_init__(self):
        for name in ("id", "document", "summary"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise ValueError(f"{name} must be a non-empty string")
        if self.reference is not None and not isinstance(self.reference, str):
            raise ValueError("reference must be a string when present")
        if self.metadata is not None:
            if not isinstance(self.metadata, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in self.metadata.items()
            ):
                raise ValueError("metadata must map strings to strings")

    def to_record(self) -> dict:
        record = {"id": self.id, "document": self.document, "summary": self.summary}
        if self.reference is not None:
            record["reference"] = self.reference
        if self.metadata is not None:
            record["metadata"] = self.metadata
        return record

    @classmethod
    def from_record(cls, record: dict) -> "Example":
        if not isinstance(record, dict):
            raise ValueError("record must be a JSON object")
        unknown = set(record) - {"id", "document", "summary", "reference", "metadata"}
        if unknown:
            raise ValueError(f"unknown fields: {sorted(unknown)}")
        try:
            return cls(
                id=record["id"],
                document=record["document"],
                summary=record["summary"],
                reference=record.get("reference"),
                metadata=record.get("metadata"),
            )
        except KeyError as exc:
            raise ValueError(f"missing field {exc.args[0]!r}") from exc


@dataclass
class LoadResult:
    """Parsed examples plus load diagnostics.

    Iterates like a list of Example. ``skipped`` counts malformed lines
    dropped in lenient mode; ``errors`` records (line number, message) for
    each of them.
    """

    examples: list[Example]
    path: Path
    skipped: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    @property
    def count(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def __len__(self) -> int:
        return len(self.examples)

    def __getitem__(self, index):
        return self.examples[index]


def load_examples(path, strict: bool = True) -> LoadResult:
    """Read an example corpus from a JSONL file.

    In strict mode the first malformed line raises MalformedRecordError.
    In lenient mode malformed lines are skipped and counted. Duplicate ids
    raise DuplicateIdError in both modes.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadableError(f"cannot read {path}: {exc}") from exc

    examples: list[Example] = []
    seen: dict[str, int] = {}
    skipped = 0
    errors: list[tuple[int, str]] = []
    # split on LF only: splitlines() would also split on NEL and friends,
    # which are legal inside JSON strings
    for lineno, line in enumerate(raw.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            example = Example.from_record(record)
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            if strict:
                raise MalformedRecordError(lineno, str(exc)) from exc
            skipped += 1
            errors.append((lineno, str(exc)))
            continue
        if example.id in seen:
            raise DuplicateIdError(example.id, lineno)
        seen[example.id] = lineno
        examples.append(example)
    return LoadResult(examples=examples, path=path, skipped=skipped, errors=errors)


def write_records(path, records: Sequence) -> int:
    """Write records (objects with to_record(), or plain dicts) as JSONL.

    Returns the number of records written. Output is deterministic for a
    given input sequence; strings keep their exact content through JSON
    escaping, so embedded newlines stay on one line.
    """
    path = Path(path)
    lines = []
    for index, record in enumerate(records):
        payload = record.to_record() if hasattr(record, "to_record") else record
        try:
            lines.append(json.dumps(payload, ensure_ascii=False).translate(_LINE_BREAKS))
        except (TypeError, ValueError) as exc:
            raise RecordWriteError(index, str(exc)) from exc
    try:
        with path.open("w", encoding="utf-8") as handle:
            for line in lines:
                handle.write(line)
                handle.write("\n")
    except OSError as exc:
        raise RecordWriteError(len(lines), f"cannot write {path}: {exc}") from exc
    return len(lines)


def load_records(path, strict: bool = True) -> tuple[list[dict], int]:
    """Read generic JSONL records (dicts). Returns (records, skipped)."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadableError(f"cannot read {path}: {exc}") from exc
    records: list[dict] = []
    skipped = 0
    for lineno, line in enumerate(raw.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("record must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            if strict:
                raise MalformedRecordError(lineno, str(exc)) from exc
            skipped += 1
            continue
        records.append(record)
    return records, skipped
