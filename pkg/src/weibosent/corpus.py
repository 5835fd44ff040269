"""Repost detection and distinct / duplicate / repost partitioning."""

from __future__ import annotations

import csv
import json
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import kernels
from .ingest import PostRecord
from .kernels import normalize_content

__all__ = [
    "CorpusPartition",
    "DuplicateWeiboId",
    "PostKind",
    "RepostRules",
    "RepostSplit",
    "detect_repost",
    "normalize_content",
    "partition",
]

REPOST_MARK = "//"


class DuplicateWeiboId(ValueError):
    pass


class KindName(str, Enum):
    DISTINCT = "distinct"
    DUPLICATE = "duplicate"
    REPOST = "repost"


@dataclass(frozen=True)
class PostKind:
    kind: KindName
    canonical_id: str | None = None

    @property
    def is_duplicate(self) -> bool:
        return self.kind is KindName.DUPLICATE


DISTINCT = PostKind(KindName.DISTINCT)
REPOST = PostKind(KindName.REPOST)


def duplicate_of(canonical_id: str) -> PostKind:
    return PostKind(KindName.DUPLICATE, canonical_id)


@dataclass(frozen=True)
class RepostSplit:
    reply: str
    original: str | None = None


@dataclass(frozen=True)
class RepostRules:
    """Which signals mark a post as a repost.

    Metadata presence and a trailing ``//`` are on by default. ``contains_at``
    additionally treats any ``//@`` inside the content as a repost marker.
    """

    metadata: bool = True
    ends_with: bool = True
    contains_at: bool = False


def _has_repost_metadata(record: PostRecord) -> bool:
    return any(
        value not in (None, "", ())
        for value in (
            record.repost_content,
            record.repost_images,
            record.repost_timestamp,
            record.repost_username,
        )
    )


def _find_mark(content: str) -> int:
    """Index of the first ``//`` that is not part of a URL scheme (``://``)."""
    start = 0
    while True:
        idx = content.find(REPOST_MARK, start)
        if idx <= 0 or content[idx - 1] != ":":
            return idx
        start = idx + 2


def detect_repost(
    record: PostRecord, rules: RepostRules = RepostRules()
) -> tuple[bool, RepostSplit | None]:
    content = record.content
    is_repost = (
        (rules.metadata and _has_repost_metadata(record))
        or (rules.ends_with and content.strip().endswith(REPOST_MARK))
        or (rules.contains_at and "//@" in content)
    )
    if not is_repost:
        return False, None
    idx = _find_mark(content)
    if idx >= 0:
        reply, rest = content[:idx], content[idx + len(REPOST_MARK):]
        original = rest if rest.strip() else (record.repost_content or None)
        return True, RepostSplit(reply=reply, original=original)
    return True, RepostSplit(reply=content, original=record.repost_content or None)


@dataclass
class CorpusPartition:
    kinds: dict[str, PostKind] = field(default_factory=dict)
    distinct: int = 0
    duplicate: int = 0
    repost: int = 0

    @property
    def counts(self) -> dict[str, int]:
        return {"distinct": self.distinct, "duplicate": self.duplicate, "repost": self.repost}

    @property
    def total(self) -> int:
        return self.distinct + self.duplicate + self.repost

    def kind_of(self, weibo_id: str) -> PostKind:
        return self.kinds[weibo_id]

    def ids_of(self, kind: KindName) -> list[str]:
        return [wid for wid, k in self.kinds.items() if k.kind is kind]

    def write_summary_csv(self, path: str | Path) -> None:
        total = self.total
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["kind", "count", "fraction"])
            for name, count in self.counts.items():
                frac = count / total if total else 0.0
                writer.writerow([name, count, f"{frac:.6f}"])

    def write_kinds_ndjson(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for wid, kind in self.kinds.items():
                row = {"weibo_id": wid, "kind": kind.kind.value}
                if kind.canonical_id is not None:
                    row["canonical_id"] = kind.canonical_id
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")

    @classmethod
    def read_kinds_ndjson(cls, path: str | Path) -> CorpusPartition:
        part = cls()
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                row = json.loads(line)
                kind = KindName(row["kind"])
                part._add(row["weibo_id"], PostKind(kind, row.get("canonical_id")))
        return part

    def _add(self, weibo_id: str, kind: PostKind) -> None:
        self.kinds[weibo_id] = kind
        setattr(self, kind.kind.value, getattr(self, kind.kind.value) + 1)


def sort_key(record: PostRecord):
    return (record.timestamp, record.weibo_id)


def partition(
    records: Iterable[PostRecord],
    rules: RepostRules = RepostRules(),
    digest: Callable[[bytes], bytes] | None = None,
) -> CorpusPartition:
    """Split records into distinct, duplicate and repost posts.

    Records are ordered by (timestamp, weibo_id) first, so the earliest post
    of each normalized-content group is the distinct representative. Reposts
    never join duplicate groups.
    """
    ordered: Sequence[PostRecord] = sorted(records, key=sort_key)
    seen: set[str] = set()
    for rec in ordered:
        if rec.weibo_id in seen:
            raise DuplicateWeiboId(rec.weibo_id)
        seen.add(rec.weibo_id)
    del seen

    reposts = [detect_repost(rec, rules)[0] for rec in ordered]
    assigned = kernels.group_duplicates([rec.content for rec in ordered], reposts, digest)

    part = CorpusPartition()
    for rec, slot in zip(ordered, assigned):
        if slot == kernels.SKIPPED:
            part._add(rec.weibo_id, REPOST)
        elif slot == kernels.FIRST:
            part._add(rec.weibo_id, DISTINCT)
        else:
            part._add(rec.weibo_id, duplicate_of(ordered[slot].weibo_id))
    return part
