"""Input validation helpers used by the public entry points."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from sklearn.exceptions import NotFittedError


def check_text(value, name: str = "text") -> str:
    if not isinstance(value, str):
        raise TypeError(f"{name} must be a string, got {type(value).__name__}")
    if not value.strip():
        raise ValueError(f"{name} must be non-empty")
    return value


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_non_negative(value, name: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise TypeError(f"{name} must be a number, got {type(value).__name__}")
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
    return float(value)


def check_mentions(text: str, mentions: Sequence) -> None:
    """Verify mention offsets index ``text``, surfaces match, spans are
    sorted and non-overlapping. Raises ValueError on the first violation."""
    prev_end = 0
    for m in mentions:
        if not (0 <= m.start < m.end <= len(text)):
            raise ValueError(f"mention span [{m.start}, {m.end}) out of range for text of length {len(text)}")
        if text[m.start:m.end] != m.surface:
            raise ValueError(f"mention surface {m.surface!r} does not match text slice {text[m.start:m.end]!r}")
        if m.start < prev_end:
            raise ValueError(f"mention at {m.start} overlaps or precedes previous mention ending at {prev_end}")
        prev_end = m.end


def check_finite_scores(scores: Iterable[float]) -> list[float]:
    out = []
    for i, s in enumerate(scores):
        if not isinstance(s, (int, float)) or isinstance(s, bool) or not math.isfinite(s):
            raise ValueError(f"score {i} is not a finite number: {s!r}")
        out.append(float(s))
    return out


def check_is_fitted(estimator, attributes: str | Sequence[str]) -> None:
    if isinstance(attributes, str):
        attributes = (attributes,)
    if not all(hasattr(estimator, attribute) for attribute in attributes):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call fit() first."
        )
