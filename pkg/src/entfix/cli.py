"""Command-line front end.

Six subcommands cover the pipeline: detect flags ungrounded mentions,
generate emits replacement candidates, synth builds training pairs from
clean examples, train fits the scorer, correct runs the whole chain, and
eval scores outcome files. One JSON config file plus a seed fully
determine every output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .candidates import TrainingPair, filter_clean, generate_candidates, make_training_pairs
from .config import PipelineConfig, build_recognizer, build_scorer, load_config
from .corrector import analyze_example, correct_example, derive_seed
from .errors import ConfigError, EntfixError
from .metrics import evaluate
from .ranking import ContrastRanker
from .records import load_examples, load_records, write_records
from .selection import SelectionOutcome


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entfix",
        description="Detect and rewrite entity hallucinations in abstractive summaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input", help="input record file")
        p.add_argument("output", help="output file")
        p.add_argument("--config", type=Path, default=None, help="pipeline config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--parallel", type=int, default=1, metavar="N",
                       help="fan out per-example work over N threads")
        p.add_argument("--strict", action="store_true",
                       help="reject malformed corpus lines instead of skipping them")
        return p

    add("detect", "flag summary mentions the source does not support")
    add("generate", "emit contrast candidates for each example")
    add("synth", "build corrupted training pairs from clean examples")
    train = add("train", "fit the candidate scorer on training pairs")
    train.add_argument("--report", type=Path, default=None, help="also write the training report here")
    add("correct", "detect, substitute, score, and select in one pass")
    ev = add("eval", "score an outcome file")
    ev.add_argument("--corpus", type=Path, default=None,
                    help="corpus with reference summaries, enables ROUGE")
    ev.add_argument("--gold-flags", type=Path, default=None,
                    help="per-example gold hallucination labels, enables identification metrics")
    ev.add_argument("--mode", choices=("changed", "threshold"), default="changed",
                    help="identification prediction rule")
    ev.add_argument("--threshold", type=float, default=0.5,
                    help="original-score cutoff for threshold mode")
    ev.add_argument("--resamples", type=int, default=1000, help="bootstrap resample count")
    ev.add_argument("--z", type=float, default=1.96, help="bootstrap interval width in standard errors")
    return parser


def _provenance(exc: BaseException) -> str:
    module = type(exc).__module__
    if module.startswith("entfix."):
        return module.split(".", 1)[1]
    return type(exc).__name__


def _load_corpus(path: str, strict: bool) -> list:
    result = load_examples(path, strict=strict)
    if result.skipped:
        print(f"entfix: skipped {result.skipped} malformed line(s) in {path}", file=sys.stderr)
    return list(result)


def _map_examples(fn, items, parallel: int) -> list:
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _cmd_detect(args, config: PipelineConfig) -> int:
    recognizer = build_recognizer(config)
    examples = _load_corpus(args.input, args.strict)

    def work(example):
        analysis = analyze_example(example, recognizer, config.label_allowlist)
        return {"id": example.id, "flagged": [m.to_record() for m in analysis.flagged]}

    write_records(args.output, _map_examples(work, examples, args.parallel))
    return 0


def _cmd_generate(args, config: PipelineConfig) -> int:
    recognizer = build_recognizer(config)
    examples = _load_corpus(args.input, args.strict)

    def work(example):
        analysis = analyze_example(example, recognizer, config.label_allowlist)
        candidates = generate_candidates(
            example.summary,
            analysis.source_mentions,
            analysis.flagged,
            max_candidates=config.max_candidates,
        )
        return [
            {"id": example.id, "index": index, **candidate.to_record()}
            for index, candidate in enumerate(candidates)
        ]

    groups = _map_examples(work, examples, args.parallel)
    write_records(args.output, [record for group in groups for record in group])
    return 0


def _cmd_synth(args, config: PipelineConfig) -> int:
    recognizer = build_recognizer(config)
    examples = _load_corpus(args.input, args.strict)
    clean = filter_clean(examples, recognizer)
    pairs = make_training_pairs(
        clean,
        recognizer,
        negatives_per_example=config.negatives_per_example,
        seed=derive_seed(config.seed, "synth"),
    )
    write_records(args.output, pairs)
    return 0


def _cmd_train(args, config: PipelineConfig) -> int:
    raw, skipped = load_records(args.input, strict=args.strict)
    if skipped:
        print(f"entfix: skipped {skipped} malformed line(s) in {args.input}", file=sys.stderr)
    pairs = [TrainingPair.from_record(record) for record in raw]
    recognizer = build_recognizer(config)
    ranker = ContrastRanker(
        learning_rate=config.train.learning_rate,
        epochs=config.train.epochs,
        margin=config.train.margin,
        batch_size=config.train.batch_size,
        epsilon=config.train.epsilon,
        seed=derive_seed(config.seed, "train"),
        recognizer=recognizer,
    )
    ranker.fit(pairs)
    ranker.save(args.output)
    if args.report is not None:
        args.report.write_text(
            json.dumps(ranker.report_.to_record(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    return 0


def _cmd_correct(args, config: PipelineConfig) -> int:
    recognizer = build_recognizer(config)
    scorer = build_scorer(config, recognizer=recognizer)
    examples = _load_corpus(args.input, args.strict)

    def work(example):
        return correct_example(
            example,
            recognizer,
            scorer.score_candidates,
            labels=config.label_allowlist,
            max_candidates=config.max_candidates,
            min_improvement=config.min_improvement,
        )

    outcomes = _map_examples(work, examples, args.parallel)
    write_records(args.output, outcomes)
    return 0


def _load_gold_flags(path: Path) -> dict[str, bool]:
    raw, _ = load_records(path, strict=True)
    flags = {}
    for index, record in enumerate(raw):
        if "id" not in record or not isinstance(record.get("hallucinated"), bool):
            raise ConfigError(f"gold flags record {index}: need string 'id' and boolean 'hallucinated'")
        flags[record["id"]] = record["hallucinated"]
    return flags


def _cmd_eval(args, config: PipelineConfig) -> int:
    raw, skipped = load_records(args.input, strict=args.strict)
    if skipped:
        print(f"entfix: skipped {skipped} malformed line(s) in {args.input}", file=sys.stderr)
    outcomes = [SelectionOutcome.from_record(record) for record in raw]
    references = None
    if args.corpus is not None:
        corpus = _load_corpus(args.corpus, args.strict)
        references = {e.id: e.reference for e in corpus if e.reference is not None}
    gold_flags = _load_gold_flags(args.gold_flags) if args.gold_flags is not None else None
    report = evaluate(
        outcomes,
        references=references,
        gold_flags=gold_flags,
        mode=args.mode,
        threshold=args.threshold,
        resamples=args.resamples,
        seed=derive_seed(config.seed, "eval"),
        z=args.z,
    )
    Path(args.output).write_text(
        json.dumps(report.to_record(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(report.render_table())
    return 0


_COMMANDS = {
    "detect": _cmd_detect,
    "generate": _cmd_generate,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "correct": _cmd_correct,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.parallel < 1:
        print(f"entfix {args.command}: [config] --parallel must be >= 1", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config) if args.config is not None else PipelineConfig()
        config = config.with_seed(args.seed)
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"entfix {args.command}: [config] {exc}", file=sys.stderr)
        return 2
    except EntfixError as exc:
        print(f"entfix {args.command}: [{_provenance(exc)}] {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"entfix {args.command}: [io] {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"entfix {args.command}: [{_provenance(exc)}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
