"""Synthetic corpora with known partition ground truth, plus brute-force oracles."""

from __future__ import annotations

import random
import re
import unicodedata
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from weibosent.ingest import PostRecord

CJK = [chr(c) for c in range(0x4E00, 0x4E00 + 400)]
TAGS = "甲乙丙丁戊己庚辛壬癸"
WHITESPACE = [" ", "\t", "\u3000", "\n", "\r\n", "\u00a0", "\u2003"]
EPOCH = datetime(2019, 11, 1, tzinfo=timezone.utc)


@dataclass
class SynthCorpus:
    records: list[PostRecord]
    distinct: int
    duplicate: int
    repost: int


def _tag(n: int) -> str:
    # Unique per group so different groups never normalize to equal text.
    digits = []
    while True:
        n, r = divmod(n, len(TAGS))
        digits.append(TAGS[r])
        if n == 0:
            return "".join(reversed(digits))


def _base_text(rng: random.Random, group: int) -> str:
    body = "".join(rng.choice(CJK) for _ in range(rng.randint(3, 25)))
    if rng.random() < 0.1:
        body += "caf\u00e9"
    return f"{body}#{_tag(group)}"


def _variant(rng: random.Random, text: str) -> str:
    chars = list(text)
    for _ in range(rng.randint(1, 4)):
        chars.insert(rng.randint(0, len(chars)), rng.choice(WHITESPACE))
    out = "".join(chars)
    if "\u00e9" in out and rng.random() < 0.5:
        out = out.replace("\u00e9", "e\u0301")
    return out


def make_corpus(n: int, seed: int = 0, repost_rate: float = 0.2, dup_rate: float = 0.3) -> SynthCorpus:
    rng = random.Random(seed)
    records: list[PostRecord] = []
    texts: list[str] = []
    used_groups: set[int] = set()
    dup = rep = 0
    for i in range(n):
        ts = EPOCH + timedelta(seconds=rng.randint(0, 150 * 86400))
        wid = f"w{i:07d}"
        r = rng.random()
        if r < repost_rate:
            rep += 1
            base = rng.choice(texts) if texts and rng.random() < 0.5 else _base_text(rng, 10**9 + i)
            if rng.random() < 0.5:
                records.append(PostRecord(wid, base + "//", ts))
            else:
                records.append(PostRecord(wid, base, ts, repost_content="原文" + base))
            continue
        if texts and r < repost_rate + dup_rate:
            group = rng.randrange(len(texts))
            content = _variant(rng, texts[group]) if rng.random() < 0.7 else texts[group]
        else:
            group = len(texts)
            texts.append(_base_text(rng, group))
            content = texts[group]
        if group in used_groups:
            dup += 1
        used_groups.add(group)
        records.append(PostRecord(wid, content, ts))
    rng.shuffle(records)
    return SynthCorpus(records, len(used_groups), dup, rep)


def oracle_normalize(text: str) -> str:
    return re.sub(r"\s", "", unicodedata.normalize("NFC", text))


def oracle_is_repost(rec: PostRecord) -> bool:
    meta = [rec.repost_content, rec.repost_images, rec.repost_timestamp, rec.repost_username]
    return any(v not in (None, "", ()) for v in meta) or rec.content.strip().endswith("//")


def oracle_partition(records: list[PostRecord]) -> dict[str, tuple[str, str | None]]:
    """O(n^2) pairwise reference: weibo_id -> (kind, canonical_id)."""
    ordered = sorted(records, key=lambda r: (r.timestamp, r.weibo_id))
    out: dict[str, tuple[str, str | None]] = {}
    for i, rec in enumerate(ordered):
        if oracle_is_repost(rec):
            out[rec.weibo_id] = ("repost", None)
            continue
        mine = oracle_normalize(rec.content)
        canon = None
        for j in range(i):
            other = ordered[j]
            if not oracle_is_repost(other) and oracle_normalize(other.content) == mine:
                canon = other.weibo_id
                break
        out[rec.weibo_id] = ("distinct", None) if canon is None else ("duplicate", canon)
    return out
