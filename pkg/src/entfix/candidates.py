"""Hallucination detection and replacement-candidate generation.

A summary mention counts as grounded when the source supports it: its
normalized form appears in the normalized source text, its name tokens
nest inside (or cover) a source mention's tokens, or its numeric values
all come from one source mention. Everything else is flagged, and flagged
spans get rewritten with type-compatible source entities.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Sequence

from .entities import (
    NAME_LABELS,
    NUMERIC_LABELS,
    EntityLabel,
    EntityMention,
    normalize_text,
    numeric_values,
)
from .errors import MissingReferenceError
from .records import Example
from .tokens import tokens
from .validation import check_positive_int


@dataclass(frozen=True)
class Substitution:
    """One span rewrite: ``replaced`` in the summary, ``replacement`` from
    the source document."""

    replaced: EntityMention
    replacement: EntityMention

    def to_record(self) -> dict:
        return {"replaced": self.replaced.to_record(), "replacement": self.replacement.to_record()}

    @classmethod
    def from_record(cls, record: dict) -> "Substitution":
        return cls(
            replaced=EntityMention.from_record(record["replaced"]),
            replacement=EntityMention.from_record(record["replacement"]),
        )


@dataclass(frozen=True)
class CandidateSummary:
    """A summary variant: the unmodified original, or a substitution of one
    or more mention spans. ``score`` is filled in by a scorer."""

    text: str
    substitutions: tuple[Substitution, ...] = ()
    score: float | None = None

    @property
    def is_original(self) -> bool:
        return not self.substitutions

    def with_score(self, score: float) -> "CandidateSummary":
        return replace(self, score=score)

    def to_record(self) -> dict:
        record: dict = {"text": self.text}
        if self.substitutions:
            record["provenance"] = {
                "kind": "substitution",
                "substitutions": [s.to_record() for s in self.substitutions],
            }
        else:
            record["provenance"] = {"kind": "original"}
        if self.score is not None:
            record["score"] = self.score
        return record

    @classmethod
    def from_record(cls, record: dict) -> "CandidateSummary":
        provenance = record.get("provenance", {"kind": "original"})
        if provenance.get("kind") == "substitution":
            subs = tuple(Substitution.from_record(s) for s in provenance["substitutions"])
        else:
            subs = ()
        return cls(text=record["text"], substitutions=subs, score=record.get("score"))


def substitution_spans(substitutions: Sequence[Substitution]) -> list[tuple[int, int]]:
    """Spans the replacements occupy in the candidate text.

    Substitutions must be ordered by their position in the original
    summary, as generate_candidates emits them.
    """
    spans = []
    shift = 0
    for sub in substitutions:
        start = sub.replaced.start + shift
        end = start + len(sub.replacement.surface)
        spans.append((start, end))
        shift += len(sub.replacement.surface) - (sub.replaced.end - sub.replaced.start)
    return spans


def _token_set(normalized: str) -> frozenset[str]:
    return frozenset(tokens(normalized))


def find_hallucinated(
    source: str,
    source_mentions: Sequence[EntityMention],
    summary_mentions: Sequence[EntityMention],
) -> list[EntityMention]:
    """Summary mentions the source does not support, in summary order."""
    source_norm = normalize_text(source)
    name_token_sets = [
        _token_set(m.normalized) for m in source_mentions
    ]
    numeric_value_sets = [
        numeric_values(m.normalized) for m in source_mentions if m.label in NUMERIC_LABELS
    ]

    flagged = []
    for mention in summary_mentions:
        if mention.normalized and mention.normalized in source_norm:
            continue
        if mention.label in NAME_LABELS:
            own = _token_set(mention.normalized)
            if own and any(
                (own <= other or other <= own) and other for other in name_token_sets
            ):
                continue
        else:
            own_values = numeric_values(mention.normalized)
            if own_values and any(own_values <= vals for vals in numeric_value_sets):
                continue
        flagged.append(mention)
    return flagged


def _splice(text: str, replacements: Sequence[tuple[EntityMention, EntityMention]]) -> CandidateSummary:
    ordered = sorted(replacements, key=lambda pair: pair[0].start)
    out = text
    for replaced, replacement in reversed(ordered):
        out = out[:replaced.start] + replacement.surface + out[replaced.end:]
    return CandidateSummary(
        text=out,
        substitutions=tuple(Substitution(r, s) for r, s in ordered),
    )


def replacement_pool(
    hallucinated: EntityMention,
    source_mentions: Sequence[EntityMention],
) -> list[EntityMention]:
    """Source mentions usable in place of a flagged mention: same label,
    deduplicated by normalized form (keeping first occurrence), and never
    normalizing to the flagged form itself."""
    pool = []
    seen = {hallucinated.normalized}
    for mention in sorted(source_mentions, key=lambda m: m.start):
        if mention.label == hallucinated.label and mention.normalized not in seen:
            seen.add(mention.normalized)
            pool.append(mention)
    return pool


def generate_candidates(
    summary: str,
    source_mentions: Sequence[EntityMention],
    hallucinated: Sequence[EntityMention],
    max_candidates: int = 64,
) -> list[CandidateSummary]:
    """Enumerate replacement candidates for a summary.

    The original always comes first. Then one candidate per (flagged
    mention, pool entry) in flagged-mention order, and, when every flagged
    mention has a non-empty pool and there are at least two of them, the
    full cross-product assignment. The list is truncated to
    ``max_candidates`` entries.
    """
    check_positive_int(max_candidates, "max_candidates")
    flagged = sorted(hallucinated, key=lambda m: m.start)
    for left, right in zip(flagged, flagged[1:]):
        if right.start < left.end:
            raise ValueError("hallucinated mentions overlap")

    candidates = [CandidateSummary(text=summary)]
    pools = [replacement_pool(m, source_mentions) for m in flagged]

    for mention, pool in zip(flagged, pools):
        for replacement in pool:
            candidates.append(_splice(summary, [(mention, replacement)]))

    if len(flagged) >= 2 and all(pools):
        for combo in itertools.product(*pools):
            candidates.append(_splice(summary, list(zip(flagged, combo))))

    return candidates[:max_candidates]


# --- training synthesis ------------------------------------------------------


@dataclass(frozen=True)
class CorruptedSpan:
    """What a synthetic corruption swapped: gold surface out, source
    surface in, plus their shared label."""

    replaced: str
    replacement: str
    label: EntityLabel

    def to_record(self) -> dict:
        return {"replaced": self.replaced, "replacement": self.replacement, "label": self.label.value}

    @classmethod
    def from_record(cls, record: dict) -> "CorruptedSpan":
        return cls(record["replaced"], record["replacement"], EntityLabel(record["label"]))


@dataclass(frozen=True)
class TrainingPair:
    """A gold summary and one corrupted variant of it."""

    example_id: str
    source: str
    positive: str
    negative: str
    corrupted_span: CorruptedSpan

    def to_record(self) -> dict:
        return {
            "example_id": self.example_id,
            "source": self.source,
            "positive": self.positive,
            "negative": self.negative,
            "corrupted_span": self.corrupted_span.to_record(),
        }

    @classmethod
    def from_record(cls, record: dict) -> "TrainingPair":
        return cls(
            example_id=record["example_id"],
            source=record["source"],
            positive=record["positive"],
            negative=record["negative"],
            corrupted_span=CorruptedSpan.from_record(record["corrupted_span"]),
        )


def filter_clean(examples: Sequence[Example], recognizer) -> list[Example]:
    """Keep examples whose reference summary has no flagged mentions.

    Every example must carry a reference; MissingReferenceError otherwise.
    """
    clean = []
    for example in examples:
        if example.reference is None:
            raise MissingReferenceError(example.id)
        source_mentions = recognizer.recognize(example.document)
        reference_mentions = recognizer.recognize(example.reference)
        if not find_hallucinated(example.document, source_mentions, reference_mentions):
            clean.append(example)
    return clean


def make_training_pairs(
    examples: Sequence[Example],
    recognizer,
    negatives_per_example: int = 8,
    seed: int = 0,
) -> list[TrainingPair]:
    """Corrupt clean gold summaries into (positive, negative) pairs.

    For each reference mention, every same-label source mention with a
    different normalized form (deduplicated) yields one negative. When an
    example produces more than ``negatives_per_example`` corruptions, a
    shuffle seeded from (seed, example id) picks which survive, so output
    is deterministic and independent of corpus order.
    """
    check_positive_int(negatives_per_example, "negatives_per_example")
    pairs = []
    for example in examples:
        if example.reference is None:
            raise MissingReferenceError(example.id)
        reference = example.reference
        source_mentions = recognizer.recognize(example.document)
        corruptions = []
        for mention in recognizer.recognize(reference):
            for replacement in replacement_pool(mention, source_mentions):
                corruptions.append((mention, replacement))
        if len(corruptions) > negatives_per_example:
            rng = random.Random(f"{seed}:{example.id}")
            rng.shuffle(corruptions)
            corruptions = corruptions[:negatives_per_example]
        for mention, replacement in corruptions:
            negative = reference[:mention.start] + replacement.surface + reference[mention.end:]
            pairs.append(TrainingPair(
                example_id=example.id,
                source=example.document,
                positive=reference,
                negative=negative,
                corrupted_span=CorruptedSpan(
                    replaced=mention.surface,
                    replacement=replacement.surface,
                    label=mention.label,
                ),
            ))
    return pairs
