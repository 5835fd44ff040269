"""Pure-Python implementations of the hot kernels (reference and fallback)."""

from __future__ import annotations

import hashlib
import unicodedata
from collections import Counter
from collections.abc import Callable, Iterable, Sequence

SKIPPED = -2
FIRST = -1


def content_digest(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=16).digest()


def normalize_content(text: str) -> str:
    """NFC-compose ``text`` and drop every Unicode whitespace character."""
    if not unicodedata.is_normalized("NFC", text):
        text = unicodedata.normalize("NFC", text)
    return "".join(text.split())


def char_counts(texts: Iterable[str], strip_whitespace: bool = False) -> dict[str, int]:
    counts: Counter[str] = Counter()
    for text in texts:
        if strip_whitespace:
            text = "".join(text.split())
        counts.update(text)
    return dict(counts)


def group_duplicates(
    contents: Sequence[str],
    skip: Sequence[bool],
    digest: Callable[[bytes], bytes] | None = None,
) -> list[int]:
    """Assign each position SKIPPED, FIRST, or the index of its first equal predecessor.

    Equality is on normalized content. Groups are keyed by ``digest`` of the
    normalized UTF-8 bytes; a digest hit is confirmed by comparing the text so
    a collision opens a new group instead of merging.
    """
    digest = digest or content_digest
    groups: dict[bytes, list[int]] = {}
    out = [SKIPPED] * len(contents)
    for i, text in enumerate(contents):
        if skip[i]:
            continue
        key = normalize_content(text)
        h = digest(key.encode("utf-8"))
        bucket = groups.get(h)
        if bucket is None:
            groups[h] = [i]
            out[i] = FIRST
            continue
        for canon in bucket:
            if normalize_content(contents[canon]) == key:
                out[i] = canon
                break
        else:
            bucket.append(i)
            out[i] = FIRST
    return out
