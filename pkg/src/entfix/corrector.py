"""End-to-end summary correction: detect, substitute, score, select.

Ties the stages together behind one estimator. All randomness is derived
from a single top-level seed: each stage hashes its name into the seed so
reruns with the same seed are bit-identical while stages stay decoupled.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from sklearn.base import BaseEstimator

from .candidates import (
    CandidateSummary,
    find_hallucinated,
    generate_candidates,
    make_training_pairs,
    filter_clean,
)
from .entities import EntityLabel, EntityMention, RuleRecognizer
from .ranking import ContrastRanker
from .records import Example
from .selection import SelectionOutcome, select_best
from .validation import check_is_fitted, check_positive_int

Scorer = Callable[[str, Sequence[CandidateSummary]], Sequence[float]]


def derive_seed(seed: int, stage: str) -> int:
    """Stable 64-bit sub-seed for a named pipeline stage."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class ExampleAnalysis:
    """Mentions extracted from one example plus its hallucination flags."""

    source_mentions: tuple[EntityMention, ...]
    summary_mentions: tuple[EntityMention, ...]
    flagged: tuple[EntityMention, ...]


def analyze_example(
    example: Example,
    recognizer,
    labels: Iterable[EntityLabel] | None = None,
) -> ExampleAnalysis:
    """Recognize mentions in document and summary and flag ungrounded ones.

    `labels` restricts which summary mentions may be flagged; mentions
    outside the allowlist are treated as grounded.
    """
    source_mentions = tuple(recognizer.recognize(example.document))
    summary_mentions = tuple(recognizer.recognize(example.summary))
    flagged = find_hallucinated(example.document, source_mentions, summary_mentions)
    if labels is not None:
        allowed = frozenset(labels)
        flagged = [m for m in flagged if m.label in allowed]
    return ExampleAnalysis(source_mentions, summary_mentions, tuple(flagged))


def correct_example(
    example: Example,
    recognizer,
    scorer: Scorer,
    labels: Iterable[EntityLabel] | None = None,
    max_candidates: int = 64,
    min_improvement: float = 0.0,
) -> SelectionOutcome:
    """Run the full correction pipeline on one example."""
    analysis = analyze_example(example, recognizer, labels)
    candidates = generate_candidates(
        example.summary,
        analysis.source_mentions,
        analysis.flagged,
        max_candidates=max_candidates,
    )
    return select_best(scorer, example, candidates, min_improvement=min_improvement)


class SummaryCorrector(BaseEstimator):
    """Trainable corrector: fit on clean examples, then rewrite summaries.

    fit() filters the training corpus to examples whose reference summary
    is fully grounded, synthesizes corrupted negatives from them, and
    trains the built-in contrast ranker. correct() maps examples to
    selection outcomes; transform() keeps just the chosen texts.
    """

    def __init__(
        self,
        recognizer=None,
        labels: Iterable[EntityLabel] | None = None,
        max_candidates: int = 64,
        negatives_per_example: int = 8,
        min_improvement: float = 0.0,
        learning_rate: float = 0.1,
        epochs: int = 3,
        margin: float = 0.0,
        batch_size: int = 32,
        epsilon: float = 1e-7,
        seed: int = 0,
    ):
        self.recognizer = recognizer
        self.labels = labels
        self.max_candidates = max_candidates
        self.negatives_per_example = negatives_per_example
        self.min_improvement = min_improvement
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.margin = margin
        self.batch_size = batch_size
        self.epsilon = epsilon
        self.seed = seed

    def _active_recognizer(self):
        return self.recognizer if self.recognizer is not None else RuleRecognizer()

    def fit(self, examples: Sequence[Example], y=None):
        check_positive_int(self.max_candidates, "max_candidates")
        check_positive_int(self.negatives_per_example, "negatives_per_example")
        recognizer = self._active_recognizer()
        clean = filter_clean(examples, recognizer)
        pairs = make_training_pairs(
            clean,
            recognizer,
            negatives_per_example=self.negatives_per_example,
            seed=derive_seed(self.seed, "synth"),
        )
        ranker = ContrastRanker(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            margin=self.margin,
            batch_size=self.batch_size,
            seed=derive_seed(self.seed, "train"),
            epsilon=self.epsilon,
            recognizer=recognizer,
        )
        ranker.fit(pairs)
        self.ranker_ = ranker
        self.n_clean_ = len(clean)
        self.n_pairs_ = len(pairs)
        return self

    def correct(self, examples: Iterable[Example]) -> list[SelectionOutcome]:
        check_is_fitted(self, ("ranker_",))
        recognizer = self._active_recognizer()
        return [
            correct_example(
                example,
                recognizer,
                self.ranker_.score_candidates,
                labels=self.labels,
                max_candidates=self.max_candidates,
                min_improvement=self.min_improvement,
            )
            for example in examples
        ]

    def transform(self, examples: Iterable[Example]) -> list[str]:
        return [outcome.chosen.text for outcome in self.correct(examples)]

    def predict(self, examples: Iterable[Example]) -> list[str]:
        return self.transform(examples)
