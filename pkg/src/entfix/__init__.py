"""Entity-level hallucination correction for abstractive summaries."""

from .candidates import (
    CandidateSummary,
    Substitution,
    TrainingPair,
    filter_clean,
    find_hallucinated,
    generate_candidates,
    make_training_pairs,
)
from .corrector import SummaryCorrector, analyze_example, correct_example, derive_seed
from .entities import EntityLabel, EntityMention, Gazetteer, RuleRecognizer, normalize, recognize
from .metrics import EvalReport, PRF, bootstrap_ci, bucket_stats, evaluate, rouge_l, rouge_n
from .ranking import ContrastRanker, pair_gradient, pair_loss
from .records import Example, load_examples, write_records
from .selection import Bucket, SelectionOutcome, select_best

__version__ = "0.1.0"

__all__ = [
    "Bucket",
    "CandidateSummary",
    "ContrastRanker",
    "EntityLabel",
    "EntityMention",
    "EvalReport",
    "Example",
    "Gazetteer",
    "PRF",
    "RuleRecognizer",
    "SelectionOutcome",
    "Substitution",
    "SummaryCorrector",
    "TrainingPair",
    "analyze_example",
    "bootstrap_ci",
    "bucket_stats",
    "correct_example",
    "derive_seed",
    "evaluate",
    "filter_clean",
    "find_hallucinated",
    "generate_candidates",
    "load_examples",
    "make_training_pairs",
    "normalize",
    "pair_gradient",
    "pair_loss",
    "recognize",
    "rouge_l",
    "rouge_n",
    "select_best",
    "write_records",
]
