"""Evaluation: ROUGE, precision/recall/F1, bucket stats, bootstrap CIs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AllZeroCountsError,
    EmptyLabelsError,
    EmptyOutcomesError,
    MissingGoldFlagError,
)
from .selection import Bucket, SelectionOutcome
from .tokens import tokens


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRF":
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        if tp == fp == fn == 0:
            raise AllZeroCountsError("precision/recall undefined for tp = fp = fn = 0")
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        return cls.from_pr(precision, recall)

    def to_record(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _ngrams(toks: Sequence[str], n: int) -> Counter:
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def rouge_n(candidate: str, reference: str, n: int = 1) -> PRF:
    """ROUGE-N with clipped n-gram counts over case-folded alphanumeric
    tokens. Empty candidate or reference yields zeros."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand = _ngrams(tokens(candidate), n)
    ref = _ngrams(tokens(reference), n)
    total_cand = sum(cand.values())
    total_ref = sum(ref.values())
    if not total_cand or not total_ref:
        return PRF(0.0, 0.0, 0.0)
    matched = sum((cand & ref).values())
    return PRF.from_pr(matched / total_cand, matched / total_ref)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, reference: str) -> PRF:
    """ROUGE-L from the longest common token subsequence over the whole
    texts."""
    cand = tokens(candidate)
    ref = tokens(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    return PRF.from_pr(lcs / len(cand), lcs / len(ref))


@dataclass(frozen=True)
class BucketFractions:
    changed: float
    kept: float
    none: float

    def to_record(self) -> dict:
        return {"changed": self.changed, "kept": self.kept, "none": self.none}


def bucket_stats(outcomes: Sequence[SelectionOutcome]) -> BucketFractions:
    """Fraction of outcomes per bucket; the three always sum to 1."""
    if not outcomes:
        raise EmptyOutcomesError("no outcomes")
    counts = Counter(o.bucket for o in outcomes)
    total = len(outcomes)
    return BucketFractions(
        changed=counts[Bucket.CHANGED] / total,
        kept=counts[Bucket.KEPT_ORIGINAL] / total,
        none=counts[Bucket.NO_CANDIDATES] / total,
    )


def identification_eval(
    outcomes: Sequence[SelectionOutcome],
    gold_flags: Mapping[str, bool],
    mode: str = "changed",
    threshold: float = 0.5,
) -> PRF:
    """Precision/recall/F1 of hallucination identification.

    mode "changed": an outcome predicts "hallucinated" when its bucket is
    changed. mode "threshold": when the original's score falls below
    ``threshold`` (missing scores predict false). Gold flags map example
    id to the true label; every outcome id must be present.
    """
    if not outcomes:
        raise EmptyOutcomesError("no outcomes")
    if mode not in ("changed", "threshold"):
        raise ValueError(f"mode must be 'changed' or 'threshold', got {mode!r}")
    tp = fp = fn = 0
    for outcome in outcomes:
        if outcome.example_id not in gold_flags:
            raise MissingGoldFlagError(outcome.example_id)
        gold = bool(gold_flags[outcome.example_id])
        if mode == "changed":
            predicted = outcome.bucket is Bucket.CHANGED
        else:
            score = outcome.original_score()
            predicted = score is not None and score < threshold
        if predicted and gold:
            tp += 1
        elif predicted:
            fp += 1
        elif gold:
            fn += 1
    return PRF.from_counts(tp, fp, fn)


@dataclass(frozen=True)
class BootstrapSummary:
    mean: float
    ci_low: float
    ci_high: float
    resamples: int
    seed: int

    def to_record(self) -> dict:
        return {
            "mean": self.mean,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "resamples": self.resamples,
            "seed": self.seed,
        }


def bootstrap_ci(
    labels: Sequence[float],
    resamples: int = 1000,
    seed: int = 0,
    z: float = 1.96,
) -> BootstrapSummary:
    """Resample-with-replacement confidence interval for a label mean.

    Draws ``resamples`` same-size resamples, takes the mean of each, and
    reports mean +/- z * std of that sampled distribution, clipped to
    [0, 1]. Deterministic for a fixed seed.
    """
    values = np.asarray(labels, dtype=float)
    if values.size == 0:
        raise EmptyLabelsError("no labels")
    if resamples < 1:
        raise ValueError(f"resamples must be >= 1, got {resamples}")
    rng = np.random.default_rng(seed)
    indices = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[indices].mean(axis=1)
    center = float(means.mean())
    spread = float(means.std(ddof=1)) if resamples > 1 else 0.0
    return BootstrapSummary(
        mean=center,
        ci_low=max(0.0, center - z * spread),
        ci_high=min(1.0, center + z * spread),
        resamples=resamples,
        seed=seed,
    )


@dataclass(frozen=True)
class EvalReport:
    """Corpus-level evaluation summary."""

    buckets: BucketFractions
    n_outcomes: int
    rouge1: PRF | None = None
    rouge2: PRF | None = None
    rougeL: PRF | None = None
    identification: PRF | None = None
    bootstrap: BootstrapSummary | None = None

    def to_record(self) -> dict:
        record: dict = {"buckets": self.buckets.to_record(), "n_outcomes": self.n_outcomes}
        if self.rouge1 is not None:
            record["rouge1"] = self.rouge1.to_record()
        if self.rouge2 is not None:
            record["rouge2"] = self.rouge2.to_record()
        if self.rougeL is not None:
            record["rougeL"] = self.rougeL.to_record()
        if self.identification is not None:
            record["identification"] = self.identification.to_record()
        if self.bootstrap is not None:
            record["bootstrap"] = self.bootstrap.to_record()
        return record

    def render_table(self) -> str:
        # 16 fits the widest cell, the [low, high] interval
        lines = [f"{'metric':<24}{'value':>16}"]
        lines.append(f"{'outcomes':<24}{self.n_outcomes:>16}")
        for name, value in (
            ("changed", self.buckets.changed),
            ("kept original", self.buckets.kept),
            ("no candidates", self.buckets.none),
        ):
            lines.append(f"{name:<24}{value:>16.4f}")
        for name, prf in (("rouge-1", self.rouge1), ("rouge-2", self.rouge2), ("rouge-l", self.rougeL)):
            if prf is not None:
                lines.append(f"{name + ' f1':<24}{prf.f1:>16.4f}")
        if self.identification is not None:
            lines.append(f"{'ident precision':<24}{self.identification.precision:>16.4f}")
            lines.append(f"{'ident recall':<24}{self.identification.recall:>16.4f}")
            lines.append(f"{'ident f1':<24}{self.identification.f1:>16.4f}")
        if self.bootstrap is not None:
            lines.append(f"{'accuracy mean':<24}{self.bootstrap.mean:>16.4f}")
            interval = f"[{self.bootstrap.ci_low:.4f}, {self.bootstrap.ci_high:.4f}]"
            lines.append(f"{'accuracy 95% ci':<24}{interval:>16}")
        return "\n".join(lines)


def _mean_prf(parts: Sequence[PRF]) -> PRF:
    return PRF(
        precision=sum(p.precision for p in parts) / len(parts),
        recall=sum(p.recall for p in parts) / len(parts),
        f1=sum(p.f1 for p in parts) / len(parts),
    )


def evaluate(
    outcomes: Sequence[SelectionOutcome],
    references: Mapping[str, str] | None = None,
    gold_flags: Mapping[str, bool] | None = None,
    mode: str = "changed",
    threshold: float = 0.5,
    resamples: int = 1000,
    seed: int = 0,
    z: float = 1.96,
) -> EvalReport:
    """Assemble the full report: buckets always, ROUGE when references are
    available, identification and a bootstrap CI over per-example
    prediction correctness when gold flags are given."""
    if not outcomes:
        raise EmptyOutcomesError("no outcomes")
    buckets = bucket_stats(outcomes)
    rouge1 = rouge2 = rougeL = None
    if references is not None:
        scored = [o for o in outcomes if o.example_id in references]
        if scored:
            rouge1 = _mean_prf([rouge_n(o.chosen.text, references[o.example_id], 1) for o in scored])
            rouge2 = _mean_prf([rouge_n(o.chosen.text, references[o.example_id], 2) for o in scored])
            rougeL = _mean_prf([rouge_l(o.chosen.text, references[o.example_id]) for o in scored])
    identification = bootstrap = None
    if gold_flags is not None:
        identification = identification_eval(outcomes, gold_flags, mode=mode, threshold=threshold)
        correct = []
        for outcome in outcomes:
            if mode == "changed":
                predicted = outcome.bucket is Bucket.CHANGED
            else:
                score = outcome.original_score()
                predicted = score is not None and score < threshold
            correct.append(1.0 if predicted == bool(gold_flags[outcome.example_id]) else 0.0)
        bootstrap = bootstrap_ci(correct, resamples=resamples, seed=seed, z=z)
    return EvalReport(
        buckets=buckets,
        n_outcomes=len(outcomes),
        rouge1=rouge1,
        rouge2=rouge2,
        rougeL=rougeL,
        identification=identification,
        bootstrap=bootstrap,
    )
