"""Entity labels, mention spans, normalization, and the rule recognizer.

Name-like labels (PERSON, ORG, GPE, ...) are matched against gazetteers;
numeric-ish labels (DATE, TIME, MONEY, PERCENT, QUANTITY, ORDINAL,
CARDINAL) are matched with pattern rules. Capitalized spans that no
gazetteer knows are deliberately left unrecognized rather than guessed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from .tokens import token_spans


class EntityLabel(str, Enum):
    PERSON = "PERSON"
    NORP = "NORP"
    FAC = "FAC"
    ORG = "ORG"
    GPE = "GPE"
    LOC = "LOC"
    PRODUCT = "PRODUCT"
    EVENT = "EVENT"
    WORK_OF_ART = "WORK_OF_ART"
    LAW = "LAW"
    LANGUAGE = "LANGUAGE"
    DATE = "DATE"
    TIME = "TIME"
    PERCENT = "PERCENT"
    MONEY = "MONEY"
    QUANTITY = "QUANTITY"
    ORDINAL = "ORDINAL"
    CARDINAL = "CARDINAL"


NAME_LABELS = frozenset({
    EntityLabel.PERSON, EntityLabel.NORP, EntityLabel.FAC, EntityLabel.ORG,
    EntityLabel.GPE, EntityLabel.LOC, EntityLabel.PRODUCT, EntityLabel.EVENT,
    EntityLabel.WORK_OF_ART, EntityLabel.LAW, EntityLabel.LANGUAGE,
})

NUMERIC_LABELS = frozenset({
    EntityLabel.DATE, EntityLabel.TIME, EntityLabel.PERCENT, EntityLabel.MONEY,
    EntityLabel.QUANTITY, EntityLabel.ORDINAL, EntityLabel.CARDINAL,
})


@dataclass(frozen=True)
class EntityMention:
    """A labeled span. Offsets are Unicode scalar indices into the text."""

    start: int
    end: int
    surface: str
    label: EntityLabel
    normalized: str

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad mention span [{self.start}, {self.end})")
        if len(self.surface) != self.end - self.start:
            raise ValueError(
                f"surface length {len(self.surface)} does not cover [{self.start}, {self.end})"
            )

    @classmethod
    def at(cls, text: str, start: int, end: int, label: EntityLabel) -> "EntityMention":
        surface = text[start:end]
        return cls(start, end, surface, label, normalize(surface, label))

    def to_record(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "surface": self.surface,
            "label": self.label.value,
            "normalized": self.normalized,
        }

    @classmethod
    def from_record(cls, record: dict) -> "EntityMention":
        return cls(
            start=record["start"],
            end=record["end"],
            surface=record["surface"],
            label=EntityLabel(record["label"]),
            normalized=record["normalized"],
        )


# --- normalization ----------------------------------------------------------

_EDGE_CHARS = " \t\n\"'“”‘’.,;:!?()[]{}<>«»—–…-_/\\"

_SCALE_SUFFIX = {"k": 10 ** 3, "m": 10 ** 6, "bn": 10 ** 9, "tn": 10 ** 12}
_SCALE_WORD = {"thousand": 10 ** 3, "million": 10 ** 6, "billion": 10 ** 9, "trillion": 10 ** 12}

_ORDINAL_WORDS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
}
_NUMBER_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11,
    "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50, "sixty": 60,
    "seventy": 70, "eighty": 80, "ninety": 90,
}
_WORD_VALUES = {**_NUMBER_WORDS, **_ORDINAL_WORDS}

_WORD_NUM_RE = re.compile(r"\b(" + "|".join(sorted(_WORD_VALUES, key=len, reverse=True)) + r")\b")
_ORDINAL_SUFFIX_RE = re.compile(r"(?<!\w)(\d+)(?:st|nd|rd|th)\b", re.IGNORECASE)
_SCALED_NUM_RE = re.compile(
    r"(?<![\w.])([$£€¥]?)"
    r"(\d+(?:,\d{3})*(?:\.\d+)?)"
    r"((?:bn|tn|k|m)\b|\s?(?:billion|million|thousand|trillion)\b)?"
    r"(?!\.?\d)",
    re.IGNORECASE,
)
_VALUE_RE = re.compile(r"\d+(?:\.\d+)?")


def _plain_decimal(d: Decimal) -> str:
    return format(d.normalize(), "f")


def _replace_scaled(match: re.Match) -> str:
    currency, number, suffix = match.group(1), match.group(2), match.group(3)
    try:
        value = Decimal(number.replace(",", ""))
    except InvalidOperation:
        return match.group(0)
    if suffix:
        key = suffix.strip().lower()
        value *= _SCALE_SUFFIX.get(key, _SCALE_WORD.get(key, 1))
    return currency + _plain_decimal(value)


def _canonicalize_numbers(text: str) -> str:
    # Word numbers first so that "twenty million" becomes scaled in one pass.
    text = _WORD_NUM_RE.sub(lambda m: str(_WORD_VALUES[m.group(1)]), text)
    text = _ORDINAL_SUFFIX_RE.sub(r"\1", text)
    return _SCALED_NUM_RE.sub(_replace_scaled, text)


def normalize(surface: str, label: EntityLabel | None = None) -> str:
    """Canonical comparison form of a mention surface.

    Case-folds, collapses whitespace, trims punctuation at both ends, drops
    a leading "the", and for numeric labels rewrites numbers to plain
    digits with scale suffixes expanded ("$9.6bn" -> "$9600000000").
    Idempotent: normalize(normalize(s)) == normalize(s).
    """
    s = re.sub(r"\s+", " ", surface.casefold()).strip()
    while True:
        trimmed = s.strip(_EDGE_CHARS)
        if trimmed.startswith("the "):
            trimmed = trimmed[4:]
        elif trimmed == "the":
            trimmed = ""
        if trimmed == s:
            break
        s = trimmed
    if label in NUMERIC_LABELS:
        s = _canonicalize_numbers(s)
    return s


@lru_cache(maxsize=256)
def normalize_text(text: str) -> str:
    """Document-level matching form: case-folded, whitespace-collapsed,
    numbers canonicalized. Used for substring grounding checks."""
    return _canonicalize_numbers(re.sub(r"\s+", " ", text.casefold()))


def numeric_values(text: str) -> frozenset[Decimal]:
    """All numeric values readable from ``text`` after canonicalization."""
    canon = _canonicalize_numbers(re.sub(r"\s+", " ", text.casefold()))
    values = set()
    for chunk in _VALUE_RE.findall(canon):
        try:
            values.add(Decimal(chunk))
        except InvalidOperation:  # pragma: no cover - regex guarantees digits
            continue
    return frozenset(values)


# --- gazetteers ------------------------------------------------------------

class Gazetteer:
    """A set of known surface forms for one name-like label.

    Entries are stored normalized; lookup normalizes the probe the same
    way, so "The United Nations" finds the entry "united nations".
    """

    def __init__(self, label: EntityLabel, entries: Iterable[str]):
        label = EntityLabel(label)
        if label not in NAME_LABELS:
            raise ValueError(f"gazetteers cover name-like labels only, got {label.value}")
        normalized = {normalize(e, label) for e in entries}
        normalized.discard("")
        if not normalized:
            raise ValueError(f"gazetteer for {label.value} has no usable entries")
        self.label = label
        self.entries = frozenset(normalized)
        self.max_tokens = max(len(e.split()) + e.count("-") + 1 for e in self.entries)

    def __contains__(self, normalized_form: str) -> bool:
        return normalized_form in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def matches(self, text: str) -> list[tuple[int, int]]:
        """Spans of text whose normalized form is a known entry."""
        spans = token_spans(text)
        found = []
        for i in range(len(spans)):
            # entries never start with an article, so a window leading
            # with "the" would only shadow the tighter match after it
            if text[spans[i][0]:spans[i][1]].casefold() == "the":
                continue
            for j in range(i, min(i + self.max_tokens, len(spans))):
                start, end = spans[i][0], spans[j][1]
                if normalize(text[start:end], self.label) in self.entries:
                    found.append((start, end))
        return found


def load_gazetteers(path) -> list[Gazetteer]:
    """Read gazetteers from a JSON file: a list of {"label", "entries"}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise ValueError("gazetteer file must hold a list of {label, entries} objects")
    out = []
    for item in raw:
        try:
            out.append(Gazetteer(EntityLabel(item["label"]), item["entries"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad gazetteer entry: {exc}") from exc
    return out


# --- pattern rules ----------------------------------------------------------

_MONTHS_FULL = (
    "january february march april may june july august september october november december"
).split()
_MONTHS_ABBR = "jan feb mar apr jun jul aug sep sept oct nov dec".split()
# "may" and "march" double as ordinary words, so they only count inside
# compound date patterns, never as standalone month mentions.
_MONTHS_STANDALONE = [m for m in _MONTHS_FULL if m not in ("may", "march")]
_WEEKDAYS = "monday tuesday wednesday thursday friday saturday sunday".split()

_MONTH_ANY = "|".join(_MONTHS_FULL + _MONTHS_ABBR)
_DAY = r"\d{1,2}(?:st|nd|rd|th)?"
_YEAR = r"[12]\d{3}"
_NUM = r"\d+(?:,\d{3})*(?:\.\d+)?"
_SCALES = r"(?:bn|tn|k|m)?(?:\s?(?:billion|million|thousand|trillion))?"
_ISO_CURRENCY = r"(?:usd|gbp|eur|jpy|aud|cad|chf|cny)"
_MONEY_WORDS = r"(?:dollars?|euros?|pounds?|cents?|pence|francs?|yen)"
_UNITS = (
    r"(?:kg|kilograms?|kilometres?|kilometers?|km|tonnes?|tons?|miles?|"
    r"metres?|meters?|litres?|liters?|gallons?|barrels?|acres?|hectares?|"
    r"ounces?|grams?|milligrams?|mg|ml|cm|mm|ft|feet|inches?|yards?|mph|"
    r"gigawatts?|megawatts?|kilowatts?|degrees?)"
)
_WORD_NUM_ALT = "|".join(sorted(_NUMBER_WORDS, key=len, reverse=True))
_ORDINAL_WORD_ALT = "|".join(sorted(_ORDINAL_WORDS, key=len, reverse=True))


def _compile(patterns: Sequence[str]) -> tuple[re.Pattern, ...]:
    return tuple(re.compile(p, re.IGNORECASE) for p in patterns)


# Order fixes tie precedence for equal-length overlaps; gazetteers rank
# after every rule family.
_RULES: tuple[tuple[EntityLabel, tuple[re.Pattern, ...]], ...] = (
    (EntityLabel.MONEY, _compile((
        rf"[$£€¥]\s?{_NUM}{_SCALES}",
        rf"\b{_ISO_CURRENCY}\s?{_NUM}{_SCALES}",
        rf"\b{_NUM}{_SCALES}\s?{_ISO_CURRENCY}\b",
        rf"\b{_NUM}{_SCALES}\s{_MONEY_WORDS}\b",
    ))),
    (EntityLabel.PERCENT, _compile((
        rf"\b{_NUM}\s?(?:%|per\s?cent\b|percent\b)",
    ))),
    (EntityLabel.DATE, _compile((
        rf"\b{_DAY}\s+(?:{_MONTH_ANY})\s+{_YEAR}\b",
        rf"\b(?:{_MONTH_ANY})\s+{_DAY},?\s+{_YEAR}\b",
        rf"\b(?:{_MONTH_ANY})\s+{_YEAR}\b",
        rf"\b{_DAY}\s+(?:{_MONTH_ANY})\b",
        rf"\b(?:{_MONTH_ANY})\s+{_DAY}\b",
        rf"\b(?:{'|'.join(_MONTHS_STANDALONE)})\b",
        rf"\b(?:{'|'.join(_WEEKDAYS)})\b",
        rf"\b{_YEAR}\b",
    ))),
    (EntityLabel.TIME, _compile((
        r"\b\d{1,2}:\d{2}(?::\d{2})?\s?(?:am|pm)?\b",
        r"\b\d{1,2}\s?(?:am|pm)\b",
        r"\b(?:noon|midnight)\b",
    ))),
    (EntityLabel.QUANTITY, _compile((
        rf"\b{_NUM}{_SCALES}\s?{_UNITS}\b",
        rf"\b(?:{_WORD_NUM_ALT})\s{_UNITS}\b",
    ))),
    (EntityLabel.ORDINAL, _compile((
        r"\b\d+(?:st|nd|rd|th)\b",
        rf"\b(?:{_ORDINAL_WORD_ALT})\b",
    ))),
    (EntityLabel.CARDINAL, _compile((
        rf"\b{_NUM}{_SCALES}\b",
        rf"\b(?:{_WORD_NUM_ALT})\b",
    ))),
)


def recognize(text: str, gazetteers: Sequence[Gazetteer] = ()) -> list[EntityMention]:
    """Find entity mentions in ``text``.

    Collects every rule and gazetteer match, then keeps a non-overlapping
    subset: longer matches win, equal-length overlaps resolve by rule
    precedence (MONEY first, gazetteers last), then by position.
    Returns mentions sorted by start offset.
    """
    if not text:
        return []
    candidates: set[tuple[int, int, EntityLabel, int]] = set()
    for priority, (label, patterns) in enumerate(_RULES):
        for pattern in patterns:
            for match in pattern.finditer(text):
                if match.start() < match.end():
                    candidates.add((match.start(), match.end(), label, priority))
    base = len(_RULES)
    for offset, gazetteer in enumerate(gazetteers):
        for start, end in gazetteer.matches(text):
            candidates.add((start, end, gazetteer.label, base + offset))

    ordered = sorted(candidates, key=lambda c: (-(c[1] - c[0]), c[3], c[0]))
    kept: list[tuple[int, int, EntityLabel]] = []
    for start, end, label, _ in ordered:
        if any(start < k_end and k_start < end for k_start, k_end, _ in kept):
            continue
        kept.append((start, end, label))
    kept.sort()
    return [EntityMention.at(text, start, end, label) for start, end, label in kept]


class RuleRecognizer:
    """Callable-object wrapper bundling gazetteers with the rule matcher."""

    def __init__(self, gazetteers: Sequence[Gazetteer] = ()):
        self.gazetteers = tuple(gazetteers)

    def recognize(self, text: str) -> list[EntityMention]:
        return recognize(text, self.gazetteers)
