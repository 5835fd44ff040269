"""Weekly (or daily) sentiment counts, percentage series and share breakdowns."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from .corpus import KindName
from .labels import LABEL_ORDER, UNPARSED, SentimentLabel


class EmptyRange(ValueError):
    pass


class EmptySelection(ValueError):
    pass


@dataclass(frozen=True)
class LabeledPost:
    weibo_id: str
    timestamp: datetime
    label: object  # SentimentLabel or UNPARSED
    kind: KindName = KindName.DISTINCT


@dataclass
class Bucket:
    start: date
    counts: dict[SentimentLabel, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass
class TimelineSeries:
    buckets: list[Bucket]
    resolution: str = "week"
    skipped_unparsed: int = 0

    def write_counts_csv(self, path: str | Path) -> None:
        key = "week_start" if self.resolution == "week" else "day"
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow([key, *(l.value for l in LABEL_ORDER)])
            for b in self.buckets:
                writer.writerow([b.start.isoformat(), *(b.counts[l] for l in LABEL_ORDER)])


def _utc_date(ts: datetime) -> date:
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc)
    return ts.date()


def bucket_start(day: date, resolution: str = "week") -> date:
    """Monday of the ISO week containing ``day`` (or ``day`` itself for daily buckets)."""
    if resolution == "day":
        return day
    if resolution != "week":
        raise ValueError(f"unknown resolution {resolution!r}")
    return day - timedelta(days=day.weekday())


def bucket_weekly(
    posts: Iterable[LabeledPost],
    start: date | None = None,
    end: date | None = None,
    resolution: str = "week",
) -> TimelineSeries:
    """Count labels per bucket over the inclusive date range [start, end].

    Buckets with no posts inside the range are emitted with zero counts. Dates
    are taken in UTC. Unparsed posts are left out and tallied separately.
    Omitted endpoints default to the earliest / latest post date.
    """
    posts = list(posts)
    days = [_utc_date(p.timestamp) for p in posts]
    if start is None or end is None:
        if not days:
            raise EmptyRange("no posts and no explicit range")
        start = start or min(days)
        end = end or max(days)
    if start > end:
        raise EmptyRange(f"range {start}..{end} is empty")

    step = timedelta(days=7 if resolution == "week" else 1)
    first, last = bucket_start(start, resolution), bucket_start(end, resolution)
    buckets: dict[date, Bucket] = {}
    cursor = first
    while cursor <= last:
        buckets[cursor] = Bucket(cursor, {l: 0 for l in LABEL_ORDER})
        cursor += step

    skipped = 0
    for post, day in zip(posts, days):
        if not start <= day <= end:
            continue
        if post.label is UNPARSED:
            skipped += 1
            continue
        buckets[bucket_start(day, resolution)].counts[post.label] += 1
    return TimelineSeries(list(buckets.values()), resolution, skipped)


@dataclass(frozen=True)
class FractionRow:
    start: date
    fractions: dict[SentimentLabel, float] | None


def percentage_series(series: TimelineSeries) -> list[FractionRow]:
    """Per-bucket label fractions; empty buckets carry ``None`` instead of 0/0."""
    out = []
    for b in series.buckets:
        total = b.total
        if total == 0:
            out.append(FractionRow(b.start, None))
        else:
            out.append(FractionRow(b.start, {l: b.counts[l] / total for l in LABEL_ORDER}))
    return out


def write_fractions_csv(rows: Sequence[FractionRow], path: str | Path, resolution: str = "week") -> None:
    key = "week_start" if resolution == "week" else "day"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([key, *(l.value for l in LABEL_ORDER)])
        for row in rows:
            if row.fractions is None:
                writer.writerow([row.start.isoformat(), *([""] * len(LABEL_ORDER))])
            else:
                writer.writerow([row.start.isoformat(), *(f"{row.fractions[l]:.6f}" for l in LABEL_ORDER)])


@dataclass(frozen=True)
class ShareBreakdown:
    scope: str
    fractions: dict[SentimentLabel, float]
    total: int


SCOPES = ("all", "distinct")


def in_scope(post: LabeledPost, scope: str, include_reposts: bool = True) -> bool:
    if scope == "all":
        return True
    if scope != "distinct":
        raise ValueError(f"unknown scope {scope!r}")
    if post.kind is KindName.DUPLICATE:
        return False
    return include_reposts or post.kind is KindName.DISTINCT


def sentiment_shares(
    posts: Iterable[LabeledPost], scope: str = "all", include_reposts: bool = True
) -> ShareBreakdown:
    """Label shares over all posts, or over non-duplicate posts for ``scope="distinct"``.

    Reposts stay in the distinct scope unless ``include_reposts`` is False.
    Unparsed posts are not counted.
    """
    counts = {l: 0 for l in LABEL_ORDER}
    for post in posts:
        if post.label is UNPARSED or not in_scope(post, scope, include_reposts):
            continue
        counts[post.label] += 1
    total = sum(counts.values())
    if total == 0:
        raise EmptySelection(f"no labelled posts in scope {scope!r}")
    return ShareBreakdown(scope, {l: counts[l] / total for l in LABEL_ORDER}, total)


def write_shares_csv(shares: Sequence[ShareBreakdown], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scope", "label", "fraction"])
        for share in shares:
            for label in LABEL_ORDER:
                writer.writerow([share.scope, label.value, f"{share.fractions[label]:.6f}"])
