"""Shared tokenization: maximal alphanumeric runs, case-folded."""

from __future__ import annotations

import re

# Unicode letters and digits; underscore excluded on purpose.
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokens(text: str) -> list[str]:
    """Case-folded alphanumeric tokens of ``text``, in order."""
    return _TOKEN.findall(text.casefold())


def token_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) offsets of each token in the original text."""
    return [m.span() for m in _TOKEN.finditer(text)]
