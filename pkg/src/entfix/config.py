"""Pipeline configuration: one JSON manifest drives every subcommand.

Unknown keys are rejected rather than ignored so typos fail loudly.
Relative paths inside the manifest resolve against the manifest's own
directory, which keeps experiment configs relocatable. Environment
variables are never consulted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .entities import EntityLabel, Gazetteer, RuleRecognizer, load_gazetteers
from .errors import ConfigError
from .ranking import ContrastRanker
from .wire import RecognizerClient, ScorerClient, SubprocessTransport, TcpTransport, WireClient

ALL_LABELS = frozenset(EntityLabel)


@dataclass(frozen=True)
class TrainSettings:
    learning_rate: float = 0.1
    epochs: int = 3
    margin: float = 0.0
    batch_size: int = 32
    epsilon: float = 1e-7


@dataclass(frozen=True)
class EndpointSettings:
    """Where an external recognizer or scorer lives."""

    kind: str  # "subprocess" or "tcp"
    command: tuple[str, ...] = ()
    host: str = ""
    port: int = 0
    timeout: float = 10.0


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    max_candidates: int = 64
    negatives_per_example: int = 8
    min_improvement: float = 0.0
    label_allowlist: frozenset[EntityLabel] = ALL_LABELS
    gazetteer_paths: tuple[Path, ...] = ()
    recognizer_endpoint: EndpointSettings | None = None
    model_path: Path | None = None
    scorer_endpoint: EndpointSettings | None = None
    train: TrainSettings = field(default_factory=TrainSettings)

    def with_seed(self, seed: int | None) -> "PipelineConfig":
        return self if seed is None else replace(self, seed=seed)


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(f"{context}: expected an object")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {sorted(unknown)}")


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _number(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}: expected a number, got {value!r}")
    return float(value)


def _integer(value, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{context}: expected an integer, got {value!r}")
    return value


def _parse_endpoint(mapping: dict, context: str) -> EndpointSettings:
    _check_keys(mapping, {"transport", "timeout"}, context)
    transport = _require(mapping, "transport", context)
    if not isinstance(transport, dict) or len(transport) != 1:
        raise ConfigError(f"{context}: transport must be a single-key object")
    timeout = _number(mapping.get("timeout", 10.0), f"{context}.timeout")
    if timeout <= 0:
        raise ConfigError(f"{context}.timeout: must be positive")
    (kind, body), = transport.items()
    if kind == "subprocess":
        _check_keys(body, {"command"}, f"{context}.transport.subprocess")
        command = _require(body, "command", f"{context}.transport.subprocess")
        if not isinstance(command, list) or not command or not all(isinstance(c, str) for c in command):
            raise ConfigError(f"{context}: subprocess command must be a non-empty list of strings")
        return EndpointSettings(kind="subprocess", command=tuple(command), timeout=timeout)
    if kind == "tcp":
        _check_keys(body, {"host", "port"}, f"{context}.transport.tcp")
        host = _require(body, "host", f"{context}.transport.tcp")
        port = _integer(_require(body, "port", f"{context}.transport.tcp"), f"{context}.port")
        if not isinstance(host, str) or not host:
            raise ConfigError(f"{context}: tcp host must be a non-empty string")
        if not 0 < port < 65536:
            raise ConfigError(f"{context}: tcp port out of range: {port}")
        return EndpointSettings(kind="tcp", host=host, port=port, timeout=timeout)
    raise ConfigError(f"{context}: unknown transport kind {kind!r}")


def _parse_labels(value, context: str) -> frozenset[EntityLabel]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{context}: expected a non-empty list of label names")
    labels = set()
    for name in value:
        try:
            labels.add(EntityLabel(name))
        except ValueError:
            raise ConfigError(f"{context}: unknown label {name!r}") from None
    return frozenset(labels)


def _parse_train(mapping: dict, context: str) -> TrainSettings:
    _check_keys(mapping, {"learning_rate", "epochs", "margin", "batch_size", "epsilon"}, context)
    settings = TrainSettings()
    out = {}
    if "learning_rate" in mapping:
        out["learning_rate"] = _number(mapping["learning_rate"], f"{context}.learning_rate")
    if "epochs" in mapping:
        out["epochs"] = _integer(mapping["epochs"], f"{context}.epochs")
    if "margin" in mapping:
        out["margin"] = _number(mapping["margin"], f"{context}.margin")
    if "batch_size" in mapping:
        out["batch_size"] = _integer(mapping["batch_size"], f"{context}.batch_size")
    if "epsilon" in mapping:
        out["epsilon"] = _number(mapping["epsilon"], f"{context}.epsilon")
    return replace(settings, **out)


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a manifest file into a PipelineConfig."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    _check_keys(
        raw,
        {
            "seed",
            "max_candidates",
            "negatives_per_example",
            "min_improvement",
            "label_allowlist",
            "recognizer",
            "scorer",
            "train",
        },
        "config",
    )
    base = path.parent
    config = PipelineConfig()
    updates: dict = {}
    if "seed" in raw:
        updates["seed"] = _integer(raw["seed"], "config.seed")
    if "max_candidates" in raw:
        value = _integer(raw["max_candidates"], "config.max_candidates")
        if value < 1:
            raise ConfigError("config.max_candidates: must be >= 1")
        updates["max_candidates"] = value
    if "negatives_per_example" in raw:
        value = _integer(raw["negatives_per_example"], "config.negatives_per_example")
        if value < 1:
            raise ConfigError("config.negatives_per_example: must be >= 1")
        updates["negatives_per_example"] = value
    if "min_improvement" in raw:
        updates["min_improvement"] = _number(raw["min_improvement"], "config.min_improvement")
    if "label_allowlist" in raw:
        updates["label_allowlist"] = _parse_labels(raw["label_allowlist"], "config.label_allowlist")
    if "recognizer" in raw:
        block = raw["recognizer"]
        if not isinstance(block, dict) or len(block) != 1:
            raise ConfigError("config.recognizer: must be a single-key object")
        (kind, body), = block.items()
        if kind == "builtin":
            _check_keys(body, {"gazetteers"}, "config.recognizer.builtin")
            paths = body.get("gazetteers", [])
            if not isinstance(paths, list) or not all(isinstance(p, str) for p in paths):
                raise ConfigError("config.recognizer.builtin.gazetteers: must be a list of paths")
            resolved = tuple(base / p for p in paths)
            for gazetteer_path in resolved:
                if not gazetteer_path.is_file():
                    raise ConfigError(f"config.recognizer: gazetteer file not found: {gazetteer_path}")
            updates["gazetteer_paths"] = resolved
        elif kind == "external":
            updates["recognizer_endpoint"] = _parse_endpoint(body, "config.recognizer.external")
        else:
            raise ConfigError(f"config.recognizer: unknown kind {kind!r}")
    if "scorer" in raw:
        block = raw["scorer"]
        if not isinstance(block, dict) or len(block) != 1:
            raise ConfigError("config.scorer: must be a single-key object")
        (kind, body), = block.items()
        if kind == "builtin":
            _check_keys(body, {"model"}, "config.scorer.builtin")
            model = _require(body, "model", "config.scorer.builtin")
            if not isinstance(model, str):
                raise ConfigError("config.scorer.builtin.model: must be a path string")
            updates["model_path"] = base / model
        elif kind == "external":
            updates["scorer_endpoint"] = _parse_endpoint(body, "config.scorer.external")
        else:
            raise ConfigError(f"config.scorer: unknown kind {kind!r}")
    if "train" in raw:
        if not isinstance(raw["train"], dict):
            raise ConfigError("config.train: must be an object")
        updates["train"] = _parse_train(raw["train"], "config.train")
    return replace(config, **updates)


def build_recognizer(config: PipelineConfig):
    """Construct the recognizer the config asks for."""
    if config.recognizer_endpoint is not None:
        endpoint = config.recognizer_endpoint
        transport = _open_transport(endpoint)
        return RecognizerClient(WireClient(transport, timeout=endpoint.timeout))
    gazetteers: list[Gazetteer] = []
    for path in config.gazetteer_paths:
        gazetteers.extend(load_gazetteers(path))
    return RuleRecognizer(gazetteers)


def build_scorer(config: PipelineConfig, recognizer=None):
    """Construct the scorer the config asks for.

    Builtin scorers need a trained model file; the recognizer is attached
    so candidate featurization sees the same mentions the pipeline does.
    """
    if config.scorer_endpoint is not None:
        endpoint = config.scorer_endpoint
        transport = _open_transport(endpoint)
        return ScorerClient(WireClient(transport, timeout=endpoint.timeout))
    if config.model_path is None:
        raise ConfigError("config.scorer: a builtin scorer needs a model path")
    if not config.model_path.is_file():
        raise ConfigError(f"config.scorer: model file not found: {config.model_path}")
    return ContrastRanker.load(config.model_path, recognizer=recognizer)


def _open_transport(endpoint: EndpointSettings):
    if endpoint.kind == "subprocess":
        return SubprocessTransport(endpoint.command)
    return TcpTransport(endpoint.host, endpoint.port, connect_timeout=endpoint.timeout)
