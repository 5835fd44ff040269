"""Pipeline configuration: one YAML (or JSON) document plus command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Any

import yaml

from .corpus import RepostRules
from .inference import EndpointConfig
from .ingest import TIMESTAMP_FORMATS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ComparisonModel:
    name: str
    table: Path  # CSV: label,precision,recall,f1
    weighted_f1: float


@dataclass
class PipelineConfig:
    input: Path | None = None
    store: Path | None = None
    output_dir: Path = Path("out")
    seed: int = 42
    aliases: dict[str, list[str]] = field(default_factory=dict)
    timestamp_formats: tuple[str, ...] = TIMESTAMP_FORMATS
    repost_rules: RepostRules = RepostRules()
    endpoint: EndpointConfig | None = None
    examples_file: Path | None = None
    batch_size: int = 512
    requery: int = 1
    truth: Path | None = None
    predictions: Path | None = None
    model_label: str = "model"
    compare: list[ComparisonModel] = field(default_factory=list)
    sample_size: int = 15_000
    strip_whitespace: bool = False
    entropy_include_reposts: bool = True
    date_from: date | None = None
    date_to: date | None = None
    resolution: str = "week"
    scope: str = "all"

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"missing required setting: {name}")


_SECTIONS = {"ingest", "corpus", "endpoint", "prompt", "classify", "evaluate", "entropy", "timeline"}
_TOP = {"input", "store", "output_dir", "seed"} | _SECTIONS


def _path(value: Any, base: Path) -> Path | None:
    if value in (None, ""):
        return None
    p = Path(str(value)).expanduser()
    return p if p.is_absolute() else (base / p)


def _date(value: Any, key: str) -> date | None:
    if value in (None, ""):
        return None
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(f"{key}: expected YYYY-MM-DD, got {value!r}") from None


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return value


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


def load_config(path: str | Path | None) -> PipelineConfig:
    """Read a config document; relative paths resolve against its directory."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(doc, _TOP, "top-level")
    return from_mapping(doc, path.parent.resolve())


def from_mapping(doc: dict, base: Path) -> PipelineConfig:
    cfg = PipelineConfig()
    cfg.input = _path(doc.get("input"), base)
    cfg.store = _path(doc.get("store"), base)
    cfg.output_dir = _path(doc.get("output_dir"), base) or base / "out"
    cfg.seed = int(doc.get("seed", cfg.seed))

    ingest = _section(doc, "ingest")
    _check_keys(ingest, {"aliases", "timestamp_formats"}, "ingest")
    cfg.aliases = {k: list(v) for k, v in (ingest.get("aliases") or {}).items()}
    if "timestamp_formats" in ingest:
        formats = tuple(ingest["timestamp_formats"])
        bad = [f for f in formats if f not in TIMESTAMP_FORMATS]
        if bad or not formats:
            raise ConfigError(f"ingest.timestamp_formats must be drawn from {TIMESTAMP_FORMATS}")
        cfg.timestamp_formats = formats

    corpus = _section(doc, "corpus")
    _check_keys(corpus, {"repost_metadata", "repost_ends_with", "repost_contains_at"}, "corpus")
    cfg.repost_rules = RepostRules(
        metadata=bool(corpus.get("repost_metadata", True)),
        ends_with=bool(corpus.get("repost_ends_with", True)),
        contains_at=bool(corpus.get("repost_contains_at", False)),
    )

    endpoint = _section(doc, "endpoint")
    if endpoint:
        allowed = {f.name for f in fields(EndpointConfig)}
        _check_keys(endpoint, allowed, "endpoint")
        try:
            cfg.endpoint = EndpointConfig(**endpoint)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"endpoint: {exc}") from exc

    prompt = _section(doc, "prompt")
    _check_keys(prompt, {"examples_file"}, "prompt")
    cfg.examples_file = _path(prompt.get("examples_file"), base)

    classify = _section(doc, "classify")
    _check_keys(classify, {"batch_size", "requery"}, "classify")
    cfg.batch_size = int(classify.get("batch_size", cfg.batch_size))
    cfg.requery = int(classify.get("requery", cfg.requery))

    evaluate = _section(doc, "evaluate")
    _check_keys(evaluate, {"truth", "predictions", "model_name", "compare"}, "evaluate")
    cfg.truth = _path(evaluate.get("truth"), base)
    cfg.predictions = _path(evaluate.get("predictions"), base)
    cfg.model_label = str(evaluate.get("model_name", cfg.model_label))
    for item in evaluate.get("compare") or []:
        try:
            cfg.compare.append(
                ComparisonModel(str(item["name"]), _path(item["table"], base), float(item["weighted_f1"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"evaluate.compare entry {item!r}: {exc}") from exc

    entropy = _section(doc, "entropy")
    _check_keys(entropy, {"sample_size", "strip_whitespace", "include_reposts"}, "entropy")
    cfg.sample_size = int(entropy.get("sample_size", cfg.sample_size))
    cfg.strip_whitespace = bool(entropy.get("strip_whitespace", False))
    cfg.entropy_include_reposts = bool(entropy.get("include_reposts", True))

    timeline = _section(doc, "timeline")
    _check_keys(timeline, {"from", "to", "resolution", "scope"}, "timeline")
    cfg.date_from = _date(timeline.get("from"), "timeline.from")
    cfg.date_to = _date(timeline.get("to"), "timeline.to")
    cfg.resolution = str(timeline.get("resolution", cfg.resolution))
    cfg.scope = str(timeline.get("scope", cfg.scope))
    validate(cfg)
    return cfg


def validate(cfg: PipelineConfig) -> None:
    if cfg.resolution not in ("week", "day"):
        raise ConfigError(f"resolution must be week or day, got {cfg.resolution!r}")
    if cfg.scope not in ("all", "distinct"):
        raise ConfigError(f"scope must be all or distinct, got {cfg.scope!r}")
    if cfg.sample_size <= 0:
        raise ConfigError("entropy.sample_size must be positive")
    if cfg.batch_size <= 0 or cfg.requery < 0:
        raise ConfigError("classify.batch_size must be positive and requery non-negative")
    if cfg.date_from and cfg.date_to and cfg.date_from > cfg.date_to:
        raise ConfigError("timeline.from is after timeline.to")
