"""Resumable corpus classification with duplicate label inheritance."""

from __future__ import annotations

import csv
import json
import logging
import os
import threading
import time
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .corpus import CorpusPartition, KindName
from .inference import AuthError, CompletionResult, InferenceClient, InferenceError
from .ingest import PostRecord, format_timestamp, parse_timestamp
from .labels import UNPARSED, SentimentLabel, _Unparsed, label_from_str
from .prompting import DEFAULT_EXAMPLES, FewShotExample, build_prompt, parse_label

logger = logging.getLogger(__name__)

Label = SentimentLabel | _Unparsed


class StoreError(OSError):
    pass


@dataclass(frozen=True)
class ClassificationRecord:
    weibo_id: str
    label: Label
    raw_output: str = ""
    attempts: int = 0
    inherited_from: str | None = None
    classified_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    model_name: str = ""
    error: str | None = None

    @property
    def effective(self) -> tuple:
        """Fields that define the outcome; excludes wall-clock provenance."""
        return (self.weibo_id, self.label, self.raw_output, self.inherited_from, self.error)

    def to_json(self) -> dict:
        row = asdict(self)
        row["label"] = self.label.value
        row["classified_at"] = format_timestamp(self.classified_at)
        if row["inherited_from"] is None:
            del row["inherited_from"]
        if row["error"] is None:
            del row["error"]
        return row

    @classmethod
    def from_json(cls, row: Mapping) -> ClassificationRecord:
        return cls(
            weibo_id=str(row["weibo_id"]),
            label=label_from_str(row["label"]),
            raw_output=row.get("raw_output", ""),
            attempts=int(row.get("attempts", 0)),
            inherited_from=row.get("inherited_from"),
            classified_at=parse_timestamp(row["classified_at"], ("iso",)),
            model_name=row.get("model_name", ""),
            error=row.get("error"),
        )


class ResultStore:
    """Append-only NDJSON store; the latest line per weibo_id wins on load.

    A torn final line (crash mid-write) is dropped when the store is opened,
    so appends always start on a fresh line.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._latest: dict[str, ClassificationRecord] = {}
        self._lock = threading.Lock()
        self.appended = 0
        self._repair_tail()
        self._load()

    def _repair_tail(self) -> None:
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
            return
        try:
            with self.path.open("rb+") as handle:
                handle.seek(0, os.SEEK_END)
                size = handle.tell()
                if size == 0:
                    return
                handle.seek(size - 1)
                if handle.read(1) == b"\n":
                    return
                # Walk back to the last complete line.
                pos = size - 1
                chunk = 4096
                while pos > 0:
                    start = max(0, pos - chunk)
                    handle.seek(start)
                    data = handle.read(pos - start)
                    nl = data.rfind(b"\n")
                    if nl >= 0:
                        pos = start + nl + 1
                        break
                    pos = start
                logger.warning("%s: dropping %d bytes of torn trailing record", self.path, size - pos)
                handle.truncate(pos)
        except OSError as exc:
            raise StoreError(f"cannot open store {self.path}: {exc}") from exc

    def _load(self) -> None:
        with self.path.open(encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, 1):
                if not line.strip():
                    continue
                try:
                    rec = ClassificationRecord.from_json(json.loads(line))
                except (ValueError, KeyError, TypeError) as exc:
                    raise StoreError(f"{self.path}:{line_no}: corrupt record ({exc})") from exc
                self._latest[rec.weibo_id] = rec

    def __contains__(self, weibo_id: str) -> bool:
        return weibo_id in self._latest

    def __len__(self) -> int:
        return len(self._latest)

    def __iter__(self) -> Iterator[ClassificationRecord]:
        return iter(self._latest.values())

    def get(self, weibo_id: str) -> ClassificationRecord | None:
        return self._latest.get(weibo_id)

    def effective_state(self) -> dict[str, tuple]:
        return {wid: rec.effective for wid, rec in sorted(self._latest.items())}

    def labels(self) -> dict[str, Label]:
        return {wid: rec.label for wid, rec in self._latest.items()}

    def append(self, records: Iterable[ClassificationRecord]) -> None:
        lines = []
        batch = list(records)
        for rec in batch:
            lines.append(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")
        if not lines:
            return
        with self._lock:
            try:
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write("".join(lines))
                    handle.flush()
                    os.fsync(handle.fileno())
            except OSError as exc:
                raise StoreError(f"cannot append to {self.path}: {exc}") from exc
            for rec in batch:
                self._latest[rec.weibo_id] = rec
            self.appended += len(batch)


@dataclass
class RunSummary:
    posts_total: int = 0
    model_calls: int = 0
    inherited: int = 0
    unparsed: int = 0
    errors: int = 0
    wall_time: float = 0.0

    def write_csv(self, path: str | Path) -> None:
        row = asdict(self)
        row["wall_time"] = f"{self.wall_time:.3f}"
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(row))
            writer.writeheader()
            writer.writerow(row)


def _now() -> datetime:
    return datetime.now(timezone.utc)


class _Classifier:
    def __init__(
        self,
        client: InferenceClient,
        store: ResultStore,
        examples: Sequence[FewShotExample],
        summary: RunSummary,
    ):
        self.client = client
        self.store = store
        self.examples = tuple(examples)
        self.summary = summary
        self.model = client.cfg.model_name

    def query(self, posts: Sequence[str]) -> list[CompletionResult | InferenceError]:
        bundles = [build_prompt(p, self.examples) for p in posts]
        self.summary.model_calls += len(bundles)
        return [res for _, res in self.client.complete_many(bundles)]

    def classify(self, items: Sequence[tuple[str, str]], requery: int) -> list[ClassificationRecord]:
        """Label ``(weibo_id, content)`` pairs, re-asking up to ``requery`` times on Unparsed."""
        attempts = [0] * len(items)
        outcome: list[tuple[Label, str, str | None]] = [(UNPARSED, "", None)] * len(items)
        pending = [i for i, (_, content) in enumerate(items) if content.strip()]
        for i, (_, content) in enumerate(items):
            if not content.strip():
                outcome[i] = (UNPARSED, "", "EmptyPost")
        for _round in range(requery + 1):
            if not pending:
                break
            results = self.query([items[i][1] for i in pending])
            retry = []
            for i, res in zip(pending, results):
                if isinstance(res, AuthError):
                    # Credentials will not fix themselves; stop before writing anything.
                    raise res
                if isinstance(res, InferenceError):
                    attempts[i] += getattr(res, "attempts", 0) or 0
                    outcome[i] = (UNPARSED, "", f"{type(res).__name__}: {res}")
                    continue
                attempts[i] += res.attempts
                label = parse_label(res.text)
                outcome[i] = (label, res.text, None)
                if label is UNPARSED:
                    retry.append(i)
            pending = retry
        out = []
        for i, (wid, _) in enumerate(items):
            label, raw, error = outcome[i]
            out.append(
                ClassificationRecord(
                    weibo_id=wid,
                    label=label,
                    raw_output=raw,
                    attempts=attempts[i],
                    classified_at=_now(),
                    model_name=self.model,
                    error=error,
                )
            )
        return out

    def tally(self, records: Iterable[ClassificationRecord]) -> None:
        for rec in records:
            if rec.error is not None:
                self.summary.errors += 1
            elif rec.label is UNPARSED:
                self.summary.unparsed += 1


def _inherit(rec: ClassificationRecord, weibo_id: str) -> ClassificationRecord:
    return ClassificationRecord(
        weibo_id=weibo_id,
        label=rec.label,
        raw_output="",
        attempts=0,
        inherited_from=rec.weibo_id,
        classified_at=_now(),
        model_name=rec.model_name,
        error=rec.error,
    )


def classify_corpus(
    partition: CorpusPartition,
    records: Mapping[str, PostRecord] | Iterable[PostRecord],
    client: InferenceClient,
    store: ResultStore,
    examples: Sequence[FewShotExample] = DEFAULT_EXAMPLES,
    batch_size: int = 512,
    requery: int = 1,
) -> RunSummary:
    """Label every post in ``partition``, appending outcomes to ``store``.

    Distinct posts and reposts go to the model (reposts with their full
    content). Duplicates copy the effective record of their canonical post.
    Ids already in the store are skipped, so a rerun resumes where an
    interrupted one stopped. Transport failures become Unparsed records with
    an ``error`` note; store I/O failures and rejected credentials abort.
    """
    started = time.perf_counter()
    by_id = records if isinstance(records, Mapping) else {r.weibo_id: r for r in records}
    missing = [wid for wid in partition.kinds if wid not in by_id]
    if missing:
        raise KeyError(f"partition references {len(missing)} unknown posts, e.g. {missing[0]!r}")

    summary = RunSummary(posts_total=partition.total)
    worker = _Classifier(client, store, examples, summary)

    todo = [
        (wid, by_id[wid].content)
        for wid, kind in partition.kinds.items()
        if kind.kind is not KindName.DUPLICATE and wid not in store
    ]
    for start in range(0, len(todo), batch_size):
        batch = worker.classify(todo[start:start + batch_size], requery)
        worker.tally(batch)
        store.append(batch)
        logger.info("classified %d/%d", min(start + batch_size, len(todo)), len(todo))

    inherited = []
    for wid, kind in partition.kinds.items():
        if kind.kind is KindName.DUPLICATE and wid not in store:
            canon = store.get(kind.canonical_id)
            if canon is None:
                raise KeyError(f"canonical post {kind.canonical_id!r} has no label")
            inherited.append(_inherit(canon, wid))
    store.append(inherited)
    summary.inherited = len(inherited)
    summary.wall_time = time.perf_counter() - started
    return summary


def requery_unparsed(
    store: ResultStore,
    records: Mapping[str, PostRecord] | Iterable[PostRecord],
    client: InferenceClient,
    max_rounds: int = 1,
    examples: Sequence[FewShotExample] = DEFAULT_EXAMPLES,
) -> RunSummary:
    """Resubmit Unparsed model-derived records for up to ``max_rounds`` rounds.

    Every round appends a superseding record, carrying the cumulative attempt
    count. Duplicates inheriting from a re-queried post are re-inherited so
    they keep matching their canonical record.
    """
    started = time.perf_counter()
    by_id = records if isinstance(records, Mapping) else {r.weibo_id: r for r in records}
    summary = RunSummary(posts_total=len(store))
    worker = _Classifier(client, store, examples, summary)

    for _round in range(max_rounds):
        targets = [
            rec for rec in store
            if rec.label is UNPARSED and rec.inherited_from is None and rec.weibo_id in by_id
        ]
        if not targets:
            break
        fresh = worker.classify([(rec.weibo_id, by_id[rec.weibo_id].content) for rec in targets], requery=0)
        fresh = [
            ClassificationRecord(
                weibo_id=new.weibo_id,
                label=new.label,
                raw_output=new.raw_output,
                attempts=old.attempts + new.attempts,
                classified_at=new.classified_at,
                model_name=new.model_name,
                error=new.error,
            )
            for old, new in zip(targets, fresh)
        ]
        store.append(fresh)
        updated = {rec.weibo_id: rec for rec in fresh}
        followers = [
            _inherit(updated[rec.inherited_from], rec.weibo_id)
            for rec in store
            if rec.inherited_from in updated
        ]
        store.append(followers)
        summary.inherited += len(followers)

    for rec in store:
        if rec.inherited_from is None:
            worker.tally([rec])
    summary.wall_time = time.perf_counter() - started
    return summary
