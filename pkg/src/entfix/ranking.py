"""Discriminative candidate scorer: logistic model over contrast features.

Trained on (gold, corrupted) pairs with a combined objective: cross
entropy pushing the gold variant toward 1 and the corrupted one toward 0,
plus a margin term penalizing corrupted variants that score above gold.

Each pair is framed the way the corrector sees candidates at inference
time: the corrupted text is scored as a kept-original candidate, and the
gold text as the substitution that repairs it. Framing it the other way
round (gold as original) teaches the model to keep every original, which
makes it useless for correction.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .candidates import CandidateSummary, Substitution, TrainingPair
from .entities import EntityMention, RuleRecognizer, normalize
from .errors import (
    CorruptModelError,
    EmptyTrainingSetError,
    NonFiniteLossError,
    SchemaMismatchError,
    SchemaVersionError,
)
from .features import FEATURE_NAMES, featurize
from .validation import check_is_fitted, check_non_negative, check_positive_int

MODEL_FORMAT_VERSION = "1"
DEFAULT_EPSILON = 1e-7


def logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    expz = math.exp(z)
    return expz / (1.0 + expz)


def clamp_probability(y: float, epsilon: float = DEFAULT_EPSILON) -> float:
    return min(max(y, epsilon), 1.0 - epsilon)


def pair_loss(y_pos: float, y_neg: float, margin: float = 0.0, epsilon: float = DEFAULT_EPSILON) -> float:
    """Cross entropy toward (1, 0) plus a hinge on the score gap."""
    yp = clamp_probability(y_pos, epsilon)
    yn = clamp_probability(y_neg, epsilon)
    return -math.log(yp) - math.log(1.0 - yn) + max(0.0, yn - yp + margin)


def pair_gradient(
    weights: np.ndarray,
    bias: float,
    phi_pos: np.ndarray,
    phi_neg: np.ndarray,
    margin: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Analytic gradient of pair_loss(score(phi_pos), score(phi_neg))
    with respect to (weights, bias). At the hinge kink the hinge
    contributes zero."""
    weights = np.asarray(weights, dtype=float)
    phi_pos = np.asarray(phi_pos, dtype=float)
    phi_neg = np.asarray(phi_neg, dtype=float)
    y_pos = logistic(float(weights @ phi_pos) + bias)
    y_neg = logistic(float(weights @ phi_neg) + bias)
    dz_pos = y_pos - 1.0
    dz_neg = y_neg
    if y_neg - y_pos + margin > 0.0:
        dz_pos -= y_pos * (1.0 - y_pos)
        dz_neg += y_neg * (1.0 - y_neg)
    grad_w = dz_pos * phi_pos + dz_neg * phi_neg
    grad_b = dz_pos + dz_neg
    return grad_w, grad_b


def _diff_window(a: str, b: str) -> tuple[int, int, int]:
    """Longest common prefix/suffix split: returns (prefix, a_end, b_end)
    so that a[prefix:a_end] and b[prefix:b_end] hold all differences."""
    prefix = 0
    limit = min(len(a), len(b))
    while prefix < limit and a[prefix] == b[prefix]:
        prefix += 1
    suffix = 0
    while suffix < limit - prefix and a[len(a) - 1 - suffix] == b[len(b) - 1 - suffix]:
        suffix += 1
    return prefix, len(a) - suffix, len(b) - suffix


def _positive_as_correction(pair: TrainingPair) -> CandidateSummary:
    """Frame the gold text as the substitution that undoes the corruption."""
    corrupted = pair.corrupted_span
    window_start, window_end, _ = _diff_window(pair.negative, pair.positive)
    replacement_surface = corrupted.replacement  # sits in the negative text
    first = pair.negative.find(replacement_surface)
    span_start = None
    probe = first
    while probe >= 0:
        if probe <= window_start and probe + len(replacement_surface) >= window_end:
            span_start = probe
            break
        probe = pair.negative.find(replacement_surface, probe + 1)
    if span_start is None:
        # hand-built pairs may not embed the surface verbatim; degrade to
        # the first occurrence, then to the raw diff window
        if first >= 0:
            span_start = first
        elif window_end > window_start:
            span_start = window_start
            replacement_surface = pair.negative[window_start:window_end]
        else:
            span_start = 0
            replacement_surface = pair.negative
    replaced = EntityMention(
        start=span_start,
        end=span_start + len(replacement_surface),
        surface=replacement_surface,
        label=corrupted.label,
        normalized=normalize(replacement_surface, corrupted.label),
    )
    gold_surface = corrupted.replaced
    source_idx = max(pair.source.find(gold_surface), 0)
    replacement = EntityMention(
        start=source_idx,
        end=source_idx + len(gold_surface),
        surface=gold_surface,
        label=corrupted.label,
        normalized=normalize(gold_surface, corrupted.label),
    )
    return CandidateSummary(
        text=pair.positive,
        substitutions=(Substitution(replaced=replaced, replacement=replacement),),
    )


def pair_features(
    pair: TrainingPair,
    recognizer,
    source_mentions: Sequence[EntityMention] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Feature vectors (positive, negative) for one training pair."""
    if source_mentions is None:
        source_mentions = recognizer.recognize(pair.source)
    phi_neg = featurize(
        pair.source,
        CandidateSummary(text=pair.negative),
        source_mentions,
        recognizer.recognize(pair.negative),
    )
    phi_pos = featurize(
        pair.source,
        _positive_as_correction(pair),
        source_mentions,
        recognizer.recognize(pair.positive),
    )
    return phi_pos, phi_neg


@dataclass(frozen=True)
class EpochStats:
    mean_loss: float
    ranking_accuracy: float


@dataclass(frozen=True)
class TrainReport:
    epochs: tuple[EpochStats, ...]
    n_pairs: int
    n_steps: int

    def to_record(self) -> dict:
        return {
            "epochs": [
                {"mean_loss": e.mean_loss, "ranking_accuracy": e.ranking_accuracy}
                for e in self.epochs
            ],
            "n_pairs": self.n_pairs,
            "n_steps": self.n_steps,
        }


class ContrastRanker(BaseEstimator):
    """Logistic scorer over the contrast feature schema.

    Parameters mirror the training defaults: 3 epochs of mini-batch
    gradient descent, batch size 32, margin 0. Deterministic for a fixed
    (pairs, params, seed) triple.
    """

    def __init__(
        self,
        learning_rate: float = 0.1,
        epochs: int = 3,
        margin: float = 0.0,
        batch_size: int = 32,
        seed: int = 0,
        epsilon: float = DEFAULT_EPSILON,
        recognizer=None,
    ):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.margin = margin
        self.batch_size = batch_size
        self.seed = seed
        self.epsilon = epsilon
        self.recognizer = recognizer

    def _active_recognizer(self):
        return self.recognizer if self.recognizer is not None else RuleRecognizer()

    def _sigmoid(self, z: np.ndarray) -> np.ndarray:
        out = np.empty_like(z)
        positive = z >= 0
        out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
        expz = np.exp(z[~positive])
        out[~positive] = expz / (1.0 + expz)
        return np.clip(out, self.epsilon, 1.0 - self.epsilon)

    def fit(self, pairs: Sequence[TrainingPair], y=None) -> "ContrastRanker":
        pairs = list(pairs)
        if not pairs:
            raise EmptyTrainingSetError("no training pairs")
        if not (isinstance(self.learning_rate, (int, float)) and self.learning_rate > 0):
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        check_positive_int(self.epochs, "epochs")
        check_positive_int(self.batch_size, "batch_size")
        check_non_negative(self.margin, "margin")

        recognizer = self._active_recognizer()
        mention_cache: dict[str, list] = {}
        rows_pos = []
        rows_neg = []
        for pair in pairs:
            if pair.source not in mention_cache:
                mention_cache[pair.source] = recognizer.recognize(pair.source)
            phi_pos, phi_neg = pair_features(pair, recognizer, mention_cache[pair.source])
            rows_pos.append(phi_pos)
            rows_neg.append(phi_neg)
        x_pos = np.vstack(rows_pos)
        x_neg = np.vstack(rows_neg)

        n = len(pairs)
        rng = np.random.default_rng(self.seed)
        weights = np.zeros(len(FEATURE_NAMES))
        bias = 0.0
        history = []
        step = 0
        for _ in range(self.epochs):
            order = rng.permutation(n)
            epoch_loss_sum = 0.0
            for batch_start in range(0, n, self.batch_size):
                batch = order[batch_start:batch_start + self.batch_size]
                y_pos = self._sigmoid(x_pos[batch] @ weights + bias)
                y_neg = self._sigmoid(x_neg[batch] @ weights + bias)
                hinge = y_neg - y_pos + self.margin
                losses = -np.log(y_pos) - np.log(1.0 - y_neg) + np.maximum(hinge, 0.0)
                if not np.all(np.isfinite(losses)):
                    raise NonFiniteLossError(step)
                epoch_loss_sum += float(losses.sum())
                dz_pos = y_pos - 1.0
                dz_neg = y_neg.copy()
                active = hinge > 0.0
                dz_pos[active] -= (y_pos * (1.0 - y_pos))[active]
                dz_neg[active] += (y_neg * (1.0 - y_neg))[active]
                grad_w = (dz_pos[:, None] * x_pos[batch] + dz_neg[:, None] * x_neg[batch]).mean(axis=0)
                grad_b = float((dz_pos + dz_neg).mean())
                weights -= self.learning_rate * grad_w
                bias -= self.learning_rate * grad_b
                step += 1
            score_pos = self._sigmoid(x_pos @ weights + bias)
            score_neg = self._sigmoid(x_neg @ weights + bias)
            history.append(EpochStats(
                mean_loss=epoch_loss_sum / n,
                ranking_accuracy=float(np.mean(score_pos > score_neg)),
            ))

        self.feature_names_ = FEATURE_NAMES
        self.weights_ = weights
        self.bias_ = bias
        self.report_ = TrainReport(epochs=tuple(history), n_pairs=n, n_steps=step)
        return self

    def score_features(self, features) -> float:
        """Probability-like score for one feature vector."""
        check_is_fitted(self, "weights_")
        phi = np.asarray(features, dtype=float)
        if phi.shape != (len(self.feature_names_),):
            raise SchemaMismatchError(
                f"expected {len(self.feature_names_)} features, got shape {phi.shape}"
            )
        if not np.all(np.isfinite(phi)):
            raise SchemaMismatchError("feature vector has non-finite values")
        raw = logistic(float(self.weights_ @ phi) + self.bias_)
        return clamp_probability(raw, self.epsilon)

    def score_candidates(
        self,
        document: str,
        candidates: Sequence[CandidateSummary],
        source_mentions: Sequence[EntityMention] | None = None,
    ) -> list[float]:
        """Score each candidate against the document, original included."""
        check_is_fitted(self, "weights_")
        recognizer = self._active_recognizer()
        if source_mentions is None:
            source_mentions = recognizer.recognize(document)
        scores = []
        for candidate in candidates:
            phi = featurize(document, candidate, source_mentions, recognizer.recognize(candidate.text))
            scores.append(self.score_features(phi))
        return scores

    def _config_digest(self) -> str:
        settings = {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "margin": self.margin,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "epsilon": self.epsilon,
        }
        return hashlib.sha256(json.dumps(settings, sort_keys=True).encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        """Write the fitted model as a versioned JSON text file."""
        check_is_fitted(self, "weights_")
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "feature_names": list(self.feature_names_),
            "weights": [float(w) for w in self.weights_],
            "bias": float(self.bias_),
            "margin": float(self.margin),
            "config_digest": self._config_digest(),
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path, recognizer=None) -> "ContrastRanker":
        """Read a model file, checking its format version and schema."""
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptModelError(f"cannot read model file {path}: {exc}") from exc
        if not isinstance(payload, dict):
            raise CorruptModelError("model file must hold a JSON object")
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise SchemaVersionError(
                f"model format version {version!r} unsupported (expected {MODEL_FORMAT_VERSION!r})"
            )
        try:
            names = tuple(payload["feature_names"])
            weights = np.asarray(payload["weights"], dtype=float)
            bias = float(payload["bias"])
            margin = float(payload["margin"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptModelError(f"model file missing or malformed field: {exc}") from exc
        if names != FEATURE_NAMES:
            raise SchemaMismatchError(f"model feature schema {names} does not match {FEATURE_NAMES}")
        if weights.shape != (len(names),) or not np.all(np.isfinite(weights)):
            raise CorruptModelError("weights must be finite and match the schema length")
        ranker = cls(margin=margin, recognizer=recognizer)
        ranker.feature_names_ = names
        ranker.weights_ = weights
        ranker.bias_ = bias
        ranker.config_digest_ = payload.get("config_digest", "")
        return ranker
