"""Feature vector for scoring a candidate summary against its source."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .candidates import CandidateSummary, find_hallucinated, substitution_spans
from .entities import EntityMention
from .tokens import token_spans, tokens

FEATURE_NAMES = (
    "grounded_mention_fraction",
    "is_original",
    "content_token_overlap",
    "replacement_log_frequency",
    "replacement_position",
    "replacement_context_overlap",
)

FLANK_TOKENS = 5

# Function words excluded from the content-token overlap feature.
_STOPWORDS = frozenset(
    """a an the and or but nor so yet in on at of for to with by from as is
    was were are be been being has have had he she it they we you i his her
    its their this that these those there here not no than then when while
    will would can could may might shall should must do does did said says
    say also into onto over under up down out about after before between
    during against""".split()
)


def _flank_tokens(text: str, span: tuple[int, int], k: int = FLANK_TOKENS) -> frozenset[str]:
    start, end = span
    before = []
    after = []
    for token_start, token_end in token_spans(text):
        if token_end <= start:
            before.append(text[token_start:token_end].casefold())
        elif token_start >= end:
            after.append(text[token_start:token_end].casefold())
    return frozenset(before[-k:] + after[:k])


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def _source_occurrence(source: str, replacement: EntityMention) -> tuple[int, int] | None:
    surface = replacement.surface
    if source[replacement.start:replacement.end] == surface:
        return (replacement.start, replacement.end)
    first = source.find(surface)
    if first < 0:
        return None
    return (first, first + len(surface))


def featurize(
    source: str,
    candidate: CandidateSummary,
    source_mentions: Sequence[EntityMention],
    candidate_mentions: Sequence[EntityMention],
) -> np.ndarray:
    """Fixed-schema feature vector (see FEATURE_NAMES).

    1. fraction of candidate mentions the source supports (1.0 when the
       candidate has no mentions at all),
    2. whether the candidate is the unmodified original,
    3. fraction of content tokens that appear in the source,
    4. mean log(1 + source occurrence count) over replacement surfaces,
    5. mean closeness of the replacement's first source occurrence to the
       document start (1 - offset / length),
    6. mean token overlap between the candidate context around each
       substituted span and the source context around the replacement.
    Features 4-6 are 0 for the original candidate.
    """
    values = np.zeros(len(FEATURE_NAMES))

    if candidate_mentions:
        flagged = find_hallucinated(source, source_mentions, candidate_mentions)
        values[0] = 1.0 - len(flagged) / len(candidate_mentions)
    else:
        values[0] = 1.0

    values[1] = 1.0 if candidate.is_original else 0.0

    content = [t for t in tokens(candidate.text) if t not in _STOPWORDS]
    if content:
        source_tokens = set(tokens(source))
        values[2] = sum(t in source_tokens for t in content) / len(content)

    if candidate.substitutions:
        spans = substitution_spans(candidate.substitutions)
        frequencies = []
        positions = []
        contexts = []
        for substitution, span in zip(candidate.substitutions, spans):
            surface = substitution.replacement.surface
            frequencies.append(math.log1p(source.count(surface) if surface else 0))
            first = source.find(surface) if surface else -1
            positions.append(1.0 - first / len(source) if first >= 0 and source else 0.0)
            occurrence = _source_occurrence(source, substitution.replacement)
            if occurrence is None:
                contexts.append(0.0)
            else:
                contexts.append(_jaccard(
                    _flank_tokens(candidate.text, span),
                    _flank_tokens(source, occurrence),
                ))
        values[3] = sum(frequencies) / len(frequencies)
        values[4] = sum(positions) / len(positions)
        values[5] = sum(contexts) / len(contexts)

    return values
