"""Command-line entry point: ``weibosent {clean,classify,evaluate,entropy,timeline,report}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict
from datetime import date
from pathlib import Path

from . import __version__
from .classifier import ResultStore, classify_corpus
from .config import ConfigError, PipelineConfig, load_config, validate
from .corpus import CorpusPartition, partition
from .entropy import char_entropy, entropy_table, sample_posts
from .evaluation import (
    MetricsReport,
    compare_models,
    confusion_matrix,
    precision_recall_f1,
    read_label_csv,
)
from .inference import InferenceClient, InferenceError
from .ingest import PostRecord, RecordParser, load_records
from .labels import LABEL_ORDER, UNPARSED, SentimentLabel
from .prompting import DEFAULT_EXAMPLES, load_examples
from .timeline import (
    LabeledPost,
    bucket_weekly,
    in_scope,
    percentage_series,
    sentiment_shares,
    write_fractions_csv,
    write_shares_csv,
)

logger = logging.getLogger("weibosent")

COMMANDS = ("clean", "classify", "evaluate", "entropy", "timeline", "report")


class Pipeline:
    """Runs commands against one config, caching the parsed corpus between stages."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.artifacts: list[Path] = []
        self._records: list[PostRecord] | None = None
        self._partition: CorpusPartition | None = None

    @property
    def out(self) -> Path:
        self.cfg.output_dir.mkdir(parents=True, exist_ok=True)
        return self.cfg.output_dir

    def _emit(self, path: Path) -> Path:
        self.artifacts.append(path)
        return path

    def corpus(self) -> tuple[list[PostRecord], CorpusPartition]:
        if self._records is None:
            self.cfg.require("input")
            parser = RecordParser(self.cfg.aliases, self.cfg.timestamp_formats)
            records, stats = load_records(
                self.cfg.input, parser=parser, error_path=self._emit(self.out / "ingest_errors.tsv")
            )
            with open(self._emit(self.out / "ingest_stats.csv"), "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(["metric", "value"])
                for key, value in stats.as_row().items():
                    writer.writerow([key, value])
                for reason, count in sorted(stats.rejection_reasons.items()):
                    writer.writerow([f"rejected:{reason}", count])
            self._records = records
            self._partition = partition(records, self.cfg.repost_rules)
        return self._records, self._partition

    def store(self) -> ResultStore:
        self.cfg.require("store")
        return ResultStore(self.cfg.store)

    # -- commands -----------------------------------------------------------

    def clean(self) -> None:
        _, part = self.corpus()
        part.write_summary_csv(self._emit(self.out / "partition_summary.csv"))
        part.write_kinds_ndjson(self._emit(self.out / "post_kinds.ndjson"))
        c = part.counts
        print(f"posts={part.total} distinct={c['distinct']} duplicate={c['duplicate']} repost={c['repost']}")

    def classify(self) -> None:
        self.cfg.require("endpoint")
        records, part = self.corpus()
        examples = load_examples(self.cfg.examples_file) if self.cfg.examples_file else DEFAULT_EXAMPLES
        store = self.store()
        with InferenceClient(self.cfg.endpoint) as client:
            summary = classify_corpus(
                part,
                {r.weibo_id: r for r in records},
                client,
                store,
                examples=examples,
                batch_size=self.cfg.batch_size,
                requery=self.cfg.requery,
            )
        self.artifacts.append(self.cfg.store)
        summary.write_csv(self._emit(self.out / "run_summary.csv"))
        print(
            f"posts={summary.posts_total} model_calls={summary.model_calls} inherited={summary.inherited} "
            f"unparsed={summary.unparsed} errors={summary.errors}"
        )

    def evaluate(self) -> None:
        self.cfg.require("truth")
        truth = read_label_csv(self.cfg.truth)
        if self.cfg.predictions is not None:
            predicted = read_label_csv(self.cfg.predictions, allow_unparsed=True)
        else:
            labels = self.store().labels()
            predicted = [(wid, labels[wid]) for wid, _ in truth if wid in labels]
        matrix = confusion_matrix(truth, predicted)
        report = precision_recall_f1(matrix, name=self.cfg.model_label)
        matrix.write_csv(self._emit(self.out / "confusion_matrix.csv"))
        report.write_csv(self._emit(self.out / "metrics.csv"))
        reports = [report]
        for model in self.cfg.compare:
            reports.append(_read_metrics_table(model.name, model.table, model.weighted_f1))
        if len(reports) > 1:
            table = compare_models(reports)
            table.write_csv(self._emit(self.out / "model_comparison.csv"))
            self._emit(self.out / "model_comparison.txt").write_text(table.to_text(), encoding="utf-8")
        print(f"weighted_f1={report.weighted_f1:.6f} n={matrix.total} excluded_unparsed={matrix.excluded_unparsed}")

    def labeled_posts(self) -> list[LabeledPost]:
        records, part = self.corpus()
        labels = self.store().labels()
        missing = sum(1 for r in records if r.weibo_id not in labels)
        if missing:
            raise ConfigError(f"{missing} posts have no label in {self.cfg.store}; run classify first")
        return [
            LabeledPost(r.weibo_id, r.timestamp, labels[r.weibo_id], part.kind_of(r.weibo_id).kind)
            for r in records
        ]

    def entropy(self) -> None:
        posts = self.labeled_posts()
        records, _ = self.corpus()
        content = {r.weibo_id: r.content for r in records}
        by_label: dict[SentimentLabel, list[str]] = defaultdict(list)
        for post in posts:
            if post.label is UNPARSED or not in_scope(post, "distinct", self.cfg.entropy_include_reposts):
                continue
            by_label[post.label].append(content[post.weibo_id])
        entropies, sizes = {}, {}
        for label in LABEL_ORDER:
            sample = sample_posts(label, by_label.get(label, []), self.cfg.sample_size, self.cfg.seed)
            entropies[label] = char_entropy(sample, strip_whitespace=self.cfg.strip_whitespace)
            sizes[label] = sample.actual_n
        report = entropy_table(entropies, sizes)
        report.write_csv(self._emit(self.out / "entropy.csv"))
        print(" ".join(f"{r.label.value}={r.entropy:.4f}" for r in report.rows) + f" pair_distance={report.pair_distance:.4f}")

    def timeline(self) -> None:
        posts = self.labeled_posts()
        cfg = self.cfg
        selected = [p for p in posts if in_scope(p, cfg.scope)]
        series = bucket_weekly(selected, cfg.date_from, cfg.date_to, cfg.resolution)
        prefix = "weekly" if cfg.resolution == "week" else "daily"
        series.write_counts_csv(self._emit(self.out / f"{prefix}_counts.csv"))
        write_fractions_csv(percentage_series(series), self._emit(self.out / f"{prefix}_fractions.csv"), cfg.resolution)
        shares = [sentiment_shares(posts, "all"), sentiment_shares(posts, "distinct")]
        write_shares_csv(shares, self._emit(self.out / "shares.csv"))
        print(f"buckets={len(series.buckets)} posts={sum(b.total for b in series.buckets)} scope={cfg.scope}")

    def report(self) -> None:
        self.clean()
        if self.cfg.endpoint is not None:
            self.classify()
        if self.cfg.truth is not None:
            self.evaluate()
        self.entropy()
        self.timeline()
        manifest = self.out / "report.json"
        artifacts = sorted({str(p.relative_to(self.out)) if p.is_relative_to(self.out) else str(p)
                            for p in self.artifacts})
        manifest.write_text(json.dumps({"version": __version__, "artifacts": artifacts}, indent=2) + "\n")
        self.artifacts.append(manifest)


def _read_metrics_table(name: str, path: Path, weighted: float) -> MetricsReport:
    rows = {}
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            label = row["label"].strip().lower()
            if label in ("weighted", ""):
                continue
            rows[label] = (float(row["precision"]), float(row["recall"]), float(row["f1"]))
    return MetricsReport.from_table(name, rows, weighted)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weibosent", description="Weibo sentiment pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="YAML/JSON pipeline config")
    parser.add_argument("--input", type=Path, help="NDJSON post corpus")
    parser.add_argument("--store", type=Path, help="classification result store (NDJSON)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--from", dest="date_from", type=date.fromisoformat, metavar="DATE")
    parser.add_argument("--to", dest="date_to", type=date.fromisoformat, metavar="DATE")
    parser.add_argument("--resolution", choices=("week", "day"))
    parser.add_argument("--scope", choices=("all", "distinct"))
    parser.add_argument("--truth", type=Path, help="ground-truth CSV (id,label)")
    parser.add_argument("--pred", type=Path, help="prediction CSV (id,label); defaults to the store")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _apply_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if args.input is not None:
        cfg.input = args.input
    if args.store is not None:
        cfg.store = args.store
    if args.out is not None:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.date_from is not None:
        cfg.date_from = args.date_from
    if args.date_to is not None:
        cfg.date_to = args.date_to
    if args.resolution is not None:
        cfg.resolution = args.resolution
    if args.scope is not None:
        cfg.scope = args.scope
    if args.truth is not None:
        cfg.truth = args.truth
    if args.pred is not None:
        cfg.predictions = args.pred
    validate(cfg)
    for name in ("input", "truth", "predictions", "examples_file"):
        path = getattr(cfg, name)
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"{name}: no such file {path}")
    return cfg


def _fail(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, ensure_ascii=False) + "\n")
    return 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        pipeline = Pipeline(cfg)
        getattr(pipeline, args.command)()
    except ConfigError as exc:
        return _fail("ConfigError", str(exc))
    except InferenceError as exc:
        return _fail(type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail("IOError", str(exc))
    except (ValueError, KeyError) as exc:
        return _fail(type(exc).__name__, str(exc))
    missing = [str(p) for p in pipeline.artifacts if not Path(p).exists()]
    if missing:
        return _fail("IOError", f"artifacts not written: {', '.join(missing)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
