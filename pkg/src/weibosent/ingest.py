"""Streaming NDJSON ingestion of raw Weibo post records."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

# Dataset display names for each PostRecord field.
FIELD_NAMES: dict[str, str] = {
    "weibo_id": "Weibo_ID",
    "user_id": "User_ID",
    "content": "Content",
    "timestamp": "Timestamp",
    "source_device": "From",
    "repost_content": "Repost - Content",
    "repost_images": "Repost - Imgs",
    "repost_timestamp": "Repost - Timestamp",
    "repost_username": "Repost - Username",
}

# Extra accepted keys per field, tried after the canonical name.
DEFAULT_ALIASES: dict[str, tuple[str, ...]] = {
    "weibo_id": ("weibo_id", "Weibo_Id", "id"),
    "user_id": ("user_id", "User_Id"),
    "content": ("content",),
    "timestamp": ("timestamp",),
    "source_device": ("from", "source_device"),
    "repost_content": ("Repost-Content", "Repost_Content", "repost_content"),
    "repost_images": ("Repost-Imgs", "Repost_Imgs", "repost_images", "repost_imgs"),
    "repost_timestamp": ("Repost-Timestamp", "Repost_Timestamp", "repost_timestamp"),
    "repost_username": ("Repost-Username", "Repost_Username", "repost_username"),
}

TIMESTAMP_FORMATS = ("epoch", "datetime", "iso")

_DATETIME_RE = re.compile(r"^\d{4}-\d{2}-\d{2} \d{2}:\d{2}(:\d{2})?$")


class RecordError(ValueError):
    """A single input line that could not become a PostRecord."""

    reason = "RecordError"

    def __init__(self, detail: str = "", line_no: int | None = None):
        super().__init__(detail or self.reason)
        self.detail = detail
        self.line_no = line_no


class MalformedJson(RecordError):
    reason = "MalformedJson"


class MissingRequiredField(RecordError):
    reason = "MissingRequiredField"

    def __init__(self, field_name: str, line_no: int | None = None):
        super().__init__(field_name, line_no)
        self.field_name = field_name


class BadTimestamp(RecordError):
    reason = "BadTimestamp"


class InvalidField(RecordError):
    reason = "InvalidField"


@dataclass(frozen=True)
class PostRecord:
    weibo_id: str
    content: str
    timestamp: datetime
    user_id: str | None = None
    source_device: str | None = None
    repost_content: str | None = None
    repost_images: tuple[str, ...] | None = None
    repost_timestamp: datetime | None = None
    repost_username: str | None = None

    def to_json(self) -> dict[str, Any]:
        """Serialize with the dataset's own key names; absent fields are omitted."""
        out: dict[str, Any] = {}
        for attr, key in FIELD_NAMES.items():
            value = getattr(self, attr)
            if value is None:
                continue
            if isinstance(value, datetime):
                value = format_timestamp(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out

    def to_line(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


@dataclass
class IngestStats:
    total_lines: int = 0
    parsed: int = 0
    rejected: int = 0
    rejection_reasons: Counter = field(default_factory=Counter)

    def as_row(self) -> dict[str, int]:
        return {"total_lines": self.total_lines, "parsed": self.parsed, "rejected": self.rejected}


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(raw: Any, formats: Sequence[str] = TIMESTAMP_FORMATS) -> datetime:
    """Parse a Timestamp value into an aware UTC datetime.

    Accepts integer epoch seconds, ``YYYY-MM-DD HH:MM[:SS]`` and ISO-8601.
    Naive wall-clock values are taken as UTC. ``formats`` sets the order in
    which shapes are tried.
    """
    for fmt in formats:
        if fmt not in TIMESTAMP_FORMATS:
            raise ValueError(f"unknown timestamp format {fmt!r}")
        result = _PARSERS[fmt](raw)
        if result is not None:
            return result
    raise BadTimestamp(f"unrecognised timestamp {raw!r}")


def _parse_epoch(raw: Any) -> datetime | None:
    if isinstance(raw, bool):
        return None
    if isinstance(raw, str) and raw.strip().lstrip("-").isdigit():
        raw = int(raw.strip())
    if not isinstance(raw, int):
        return None
    try:
        return datetime.fromtimestamp(raw, tz=timezone.utc)
    except (OverflowError, OSError, ValueError):
        return None


def _parse_datetime(raw: Any) -> datetime | None:
    if not isinstance(raw, str) or not _DATETIME_RE.match(raw.strip()):
        return None
    text = raw.strip()
    fmt = "%Y-%m-%d %H:%M:%S" if text.count(":") == 2 else "%Y-%m-%d %H:%M"
    try:
        return datetime.strptime(text, fmt).replace(tzinfo=timezone.utc)
    except ValueError:
        return None


def _parse_iso(raw: Any) -> datetime | None:
    if not isinstance(raw, str) or len(raw.strip()) < 10:
        return None
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        return None
    if parsed.tzinfo is None:
        return parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


_PARSERS = {"epoch": _parse_epoch, "datetime": _parse_datetime, "iso": _parse_iso}


class RecordParser:
    """Maps one JSON object onto a PostRecord using canonical names plus aliases."""

    def __init__(
        self,
        aliases: Mapping[str, Sequence[str]] | None = None,
        timestamp_formats: Sequence[str] = TIMESTAMP_FORMATS,
    ):
        merged = {k: tuple(v) for k, v in DEFAULT_ALIASES.items()}
        for attr, extra in (aliases or {}).items():
            if attr not in FIELD_NAMES:
                raise ValueError(f"alias for unknown field {attr!r}")
            merged[attr] = tuple(extra) + merged.get(attr, ())
        self._keys = {attr: (FIELD_NAMES[attr],) + merged.get(attr, ()) for attr in FIELD_NAMES}
        self.timestamp_formats = tuple(timestamp_formats)

    def _lookup(self, obj: Mapping[str, Any], attr: str) -> Any:
        for key in self._keys[attr]:
            if key in obj and obj[key] is not None:
                return obj[key]
        return None

    def parse(self, line: str, line_no: int | None = None) -> PostRecord:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedJson(str(exc), line_no) from None
        if not isinstance(obj, dict):
            raise MalformedJson(f"expected object, got {type(obj).__name__}", line_no)
        return self.from_mapping(obj, line_no)

    def from_mapping(self, obj: Mapping[str, Any], line_no: int | None = None) -> PostRecord:
        weibo_id = self._lookup(obj, "weibo_id")
        if weibo_id is None or (isinstance(weibo_id, str) and not weibo_id.strip()):
            raise MissingRequiredField("weibo_id", line_no)
        content = self._lookup(obj, "content")
        if content is None:
            raise MissingRequiredField("content", line_no)
        if not isinstance(content, str):
            raise InvalidField(f"content must be text, got {type(content).__name__}", line_no)
        raw_ts = self._lookup(obj, "timestamp")
        if raw_ts is None:
            raise MissingRequiredField("timestamp", line_no)
        try:
            timestamp = parse_timestamp(raw_ts, self.timestamp_formats)
        except BadTimestamp as exc:
            raise BadTimestamp(exc.detail, line_no) from None

        repost_ts = self._lookup(obj, "repost_timestamp")
        if repost_ts is not None and repost_ts != "":
            try:
                repost_ts = parse_timestamp(repost_ts, self.timestamp_formats)
            except BadTimestamp as exc:
                raise BadTimestamp(f"repost timestamp: {exc.detail}", line_no) from None
        else:
            repost_ts = None

        images = self._lookup(obj, "repost_images")
        if images is not None:
            if isinstance(images, str):
                images = (images,) if images else ()
            elif isinstance(images, list):
                images = tuple(str(x) for x in images)
            else:
                raise InvalidField("repost images must be a list or text", line_no)

        return PostRecord(
            weibo_id=str(weibo_id),
            content=content,
            timestamp=timestamp,
            user_id=_opt_text(self._lookup(obj, "user_id")),
            source_device=_opt_text(self._lookup(obj, "source_device")),
            repost_content=_opt_text(self._lookup(obj, "repost_content")),
            repost_images=images,
            repost_timestamp=repost_ts,
            repost_username=_opt_text(self._lookup(obj, "repost_username")),
        )


def _opt_text(value: Any) -> str | None:
    return None if value is None else str(value)


_DEFAULT_PARSER = RecordParser()


def parse_record(line: str, parser: RecordParser | None = None) -> PostRecord:
    """Parse one JSON line. Raises a RecordError subclass on rejection."""
    return (parser or _DEFAULT_PARSER).parse(line)


class CorpusStream:
    """Iterate a newline-delimited JSON file, yielding PostRecord or RecordError.

    Whitespace-only lines are skipped and not counted. ``stats`` is complete
    once iteration finishes. Rejections go to ``error_path`` as
    ``line_no<TAB>reason`` lines when given.
    """

    def __init__(
        self,
        path: str | Path,
        parser: RecordParser | None = None,
        error_path: str | Path | None = None,
    ):
        self.path = Path(path)
        self.parser = parser or _DEFAULT_PARSER
        self.error_path = Path(error_path) if error_path else None
        self.stats = IngestStats()
        # Fail fast on unreadable input rather than on first next().
        with self.path.open("rb"):
            pass

    def __iter__(self) -> Iterator[PostRecord | RecordError]:
        stats = self.stats = IngestStats()
        err_handle = self.error_path.open("w", encoding="utf-8") if self.error_path else None
        try:
            with self.path.open("rb") as handle:
                for line_no, raw in enumerate(handle, 1):
                    if not raw.strip():
                        continue
                    stats.total_lines += 1
                    try:
                        try:
                            line = raw.decode("utf-8")
                        except UnicodeDecodeError as exc:
                            raise MalformedJson(f"invalid UTF-8: {exc}", line_no) from None
                        record = self.parser.parse(line, line_no)
                    except RecordError as exc:
                        stats.rejected += 1
                        stats.rejection_reasons[exc.reason] += 1
                        if err_handle is not None:
                            err_handle.write(f"{line_no}\t{exc.reason}\n")
                        yield exc
                    else:
                        stats.parsed += 1
                        yield record
        finally:
            if err_handle is not None:
                err_handle.close()
        if stats.rejected:
            logger.warning("%s: rejected %d of %d lines", self.path, stats.rejected, stats.total_lines)


def stream_corpus(
    path: str | Path,
    parser: RecordParser | None = None,
    error_path: str | Path | None = None,
) -> CorpusStream:
    return CorpusStream(path, parser=parser, error_path=error_path)


def load_records(
    path: str | Path,
    parser: RecordParser | None = None,
    error_path: str | Path | None = None,
) -> tuple[list[PostRecord], IngestStats]:
    """Collect all valid records from ``path``; rejections are counted, not raised."""
    stream = stream_corpus(path, parser=parser, error_path=error_path)
    records = [item for item in stream if isinstance(item, PostRecord)]
    return records, stream.stats
