"""Pick the most faithful candidate summary from a scored set."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

from .candidates import CandidateSummary
from .validation import check_finite_scores, check_non_negative


class Bucket(str, Enum):
    CHANGED = "changed"
    KEPT_ORIGINAL = "kept_original"
    NO_CANDIDATES = "no_candidates"


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of correcting one example."""

    example_id: str
    chosen: CandidateSummary
    bucket: Bucket
    scored: tuple[tuple[CandidateSummary, float], ...]
    scorer_failed: bool = False

    def to_record(self) -> dict:
        record = {
            "example_id": self.example_id,
            "chosen": self.chosen.to_record(),
            "bucket": self.bucket.value,
            "scores": [
                {"text": candidate.text, "original": candidate.is_original, "score": score}
                for candidate, score in self.scored
            ],
        }
        if self.scorer_failed:
            record["scorer_failed"] = True
        return record

    @classmethod
    def from_record(cls, record: dict) -> "SelectionOutcome":
        chosen = CandidateSummary.from_record(record["chosen"])
        scored = tuple(
            (CandidateSummary(text=entry["text"]), entry["score"])
            for entry in record.get("scores", [])
        )
        return cls(
            example_id=record["example_id"],
            chosen=chosen,
            bucket=Bucket(record["bucket"]),
            scored=scored,
            scorer_failed=record.get("scorer_failed", False),
        )

    def original_score(self) -> float | None:
        for candidate, score in self.scored:
            if candidate.is_original:
                return score
        return None


def _tie_key(candidate: CandidateSummary) -> tuple:
    if candidate.is_original:
        return (0, 0, candidate.text)
    earliest = min(sub.replacement.start for sub in candidate.substitutions)
    return (1, earliest, candidate.text)


def select_best(
    scorer: Callable[[str, Sequence[CandidateSummary]], Sequence[float]],
    example,
    candidates: Sequence[CandidateSummary],
    min_improvement: float = 0.0,
) -> SelectionOutcome:
    """Score candidates and keep the best one.

    ``scorer`` is called as scorer(document, candidates) and must return
    one finite score per candidate. Exact ties resolve to the original,
    then to the substitution whose replacement occurs earliest in the
    source, then lexicographically by text. A non-original winner must
    beat the original's score by more than ``min_improvement``.

    If the scorer raises, the original is kept with a diagnostic flag
    instead of propagating the failure.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must be non-empty")
    originals = [c for c in candidates if c.is_original]
    if len(originals) != 1:
        raise ValueError(f"expected exactly one original candidate, found {len(originals)}")
    check_non_negative(min_improvement, "min_improvement")
    original = originals[0]
    only_original = len(candidates) == 1

    try:
        scores = check_finite_scores(scorer(example.document, candidates))
        if len(scores) != len(candidates):
            raise ValueError(f"scorer returned {len(scores)} scores for {len(candidates)} candidates")
    except Exception:
        return SelectionOutcome(
            example_id=example.id,
            chosen=original,
            bucket=Bucket.NO_CANDIDATES if only_original else Bucket.KEPT_ORIGINAL,
            scored=(),
            scorer_failed=True,
        )

    indexed = sorted(
        range(len(candidates)),
        key=lambda i: (-scores[i], _tie_key(candidates[i])),
    )
    best = indexed[0]
    chosen = candidates[best]
    original_score = scores[candidates.index(original)]
    if not chosen.is_original and scores[best] - original_score <= min_improvement and min_improvement > 0:
        chosen = original
        best = candidates.index(original)

    scored = tuple(
        (candidate.with_score(score), score) for candidate, score in zip(candidates, scores)
    )
    if only_original:
        bucket = Bucket.NO_CANDIDATES
    elif chosen.is_original:
        bucket = Bucket.KEPT_ORIGINAL
    else:
        bucket = Bucket.CHANGED
    return SelectionOutcome(
        example_id=example.id,
        chosen=chosen.with_score(scores[best]),
        bucket=bucket,
        scored=scored,
    )
