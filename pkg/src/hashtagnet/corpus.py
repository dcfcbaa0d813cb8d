"""Parsing, normalisation and filtering of hashtag-annotated messages."""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timezone
from os import PathLike
from typing import BinaryIO, Iterable, NamedTuple, Sequence

log = logging.getLogger(__name__)

HASHTAG_RE = re.compile(r"#[^\s#]+")
_LEAD_RE = re.compile(r"^[#\s]+")
_TRAIL_RE = re.compile(r"[.,!?:;\s]+$")
CSV_FIELDS = ("id", "user", "hashtags", "timestamp")
FORMATS = ("jsonl", "csv")


class CorpusError(Exception):
    """Base class for corpus input problems."""


class CorpusIOError(CorpusError):
    pass


class SchemaError(CorpusError):
    pass


@dataclass(frozen=True)
class MessageRecord:
    message_id: str
    author: str
    hashtags: tuple[str, ...]
    timestamp: datetime

    def __post_init__(self):
        if not self.author:
            raise ValueError("author must be non-empty")
        if len(set(self.hashtags)) != len(self.hashtags):
            raise ValueError(f"duplicate hashtags in message {self.message_id!r}")
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))

    @property
    def day(self) -> date:
        """UTC calendar day of the message."""
        return self.timestamp.astimezone(timezone.utc).date()


@dataclass(frozen=True)
class CorpusConfig:
    excluded_hashtags: frozenset[str] = field(default_factory=lambda: frozenset({"occupy"}))
    date_range: tuple[datetime, datetime] | None = None
    lowercase_fold: bool = True

    def __post_init__(self):
        excluded = frozenset(self.excluded_hashtags)
        for tag in excluded:
            if normalize_hashtag(tag, self.lowercase_fold) != tag:
                raise ValueError(f"excluded hashtag {tag!r} is not normalized")
        object.__setattr__(self, "excluded_hashtags", excluded)
        if self.date_range is not None:
            start, end = (_as_utc(t) for t in self.date_range)
            if start > end:
                raise ValueError("date_range start is after end")
            object.__setattr__(self, "date_range", (start, end))


class ParseResult(NamedTuple):
    records: list[MessageRecord]
    n_lines: int
    n_malformed: int


def normalize_hashtag(token: str, lowercase_fold: bool = True) -> str:
    """Canonical form of a hashtag token; an empty result means "discard".

    >>> normalize_hashtag("#OWS!")
    'ows'
    """
    tag = _LEAD_RE.sub("", token)
    if lowercase_fold:
        tag = tag.lower()
    return _TRAIL_RE.sub("", tag)


def normalize_author(handle: str) -> str:
    return handle.strip().lstrip("@").strip().lower()


def extract_hashtags(text: str, lowercase_fold: bool = True) -> list[str]:
    return _dedupe(normalize_hashtag(t, lowercase_fold) for t in HASHTAG_RE.findall(text))


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant into an aware UTC datetime at second resolution."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    return _as_utc(ts).replace(microsecond=0)


def parse_records(
    source: BinaryIO | str | PathLike,
    fmt: str = "jsonl",
    lowercase_fold: bool = True,
) -> ParseResult:
    """Read a JSONL or CSV corpus.

    Malformed lines are skipped and counted; if more than half of the
    non-blank lines are malformed the input is rejected with SchemaError.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}")
    try:
        if isinstance(source, (str, PathLike)):
            with open(source, "rb") as fh:
                raw = fh.read()
        else:
            raw = source.read()
        text = raw.decode("utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusIOError(f"cannot read corpus: {exc}") from exc

    if fmt == "jsonl":
        records, n_lines, n_bad = _parse_jsonl(text, lowercase_fold)
    else:
        records, n_lines, n_bad = _parse_csv(text, lowercase_fold)

    if n_lines and n_bad * 2 > n_lines:
        raise SchemaError(f"{n_bad} of {n_lines} lines malformed")
    if n_bad:
        log.warning("skipped %d malformed line(s) of %d", n_bad, n_lines)
    return ParseResult(records, n_lines, n_bad)


def _parse_jsonl(text: str, lowercase_fold: bool):
    records = []
    n_lines = n_bad = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        n_lines += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("not an object")
            records.append(_record_from_fields(obj, lineno, lowercase_fold))
        except (ValueError, TypeError, KeyError) as exc:
            log.debug("line %d malformed: %s", lineno, exc)
            n_bad += 1
    return records, n_lines, n_bad


def _parse_csv(text: str, lowercase_fold: bool):
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return [], 0, 0
    missing = {"user", "timestamp"} - set(reader.fieldnames)
    if missing:
        raise SchemaError(f"CSV header lacks {sorted(missing)}")
    records = []
    n_lines = n_bad = 0
    for row in reader:
        if not any((v or "").strip() for v in row.values() if isinstance(v, str)):
            continue
        n_lines += 1
        try:
            if None in row:
                raise ValueError("too many columns")
            fields = dict(row)
            tags = fields.pop("hashtags", None) or ""
            fields["hashtags"] = [t for t in tags.split("|") if t.strip()]
            if not fields.get("id"):
                fields.pop("id", None)
            records.append(_record_from_fields(fields, reader.line_num, lowercase_fold))
        except (ValueError, TypeError, KeyError) as exc:
            log.debug("row %d malformed: %s", reader.line_num, exc)
            n_bad += 1
    return records, n_lines, n_bad


def _record_from_fields(obj: dict, lineno: int, lowercase_fold: bool) -> MessageRecord:
    user = obj["user"]
    if not isinstance(user, str):
        raise TypeError("user must be a string")
    author = normalize_author(user)
    if not author:
        raise ValueError("empty user")
    ts = obj["timestamp"]
    if not isinstance(ts, str):
        raise TypeError("timestamp must be a string")

    tags = obj.get("hashtags")
    if tags is not None:
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise TypeError("hashtags must be a list of strings")
        hashtags = _dedupe(normalize_hashtag(t, lowercase_fold) for t in tags)
    else:
        text = obj.get("text") or ""
        if not isinstance(text, str):
            raise TypeError("text must be a string")
        hashtags = extract_hashtags(text, lowercase_fold)

    msg_id = obj.get("id")
    if msg_id is None:
        msg_id = f"L{lineno}"
    return MessageRecord(str(msg_id), author, tuple(hashtags), parse_timestamp(ts))


def filter_records(records: Iterable[MessageRecord], config: CorpusConfig) -> list[MessageRecord]:
    """Drop records outside the date range and strip excluded hashtags."""
    excluded = config.excluded_hashtags
    out = []
    for rec in records:
        if config.date_range is not None:
            start, end = config.date_range
            if not start <= rec.timestamp <= end:
                continue
        if excluded and any(t in excluded for t in rec.hashtags):
            rec = replace(rec, hashtags=tuple(t for t in rec.hashtags if t not in excluded))
        out.append(rec)
    return out


def day_range(start: date | None, end: date | None) -> tuple[datetime, datetime] | None:
    """Inclusive whole-day UTC interval for the CLI ``--from/--to`` flags."""
    if start is None and end is None:
        return None
    lo = datetime.combine(start or date.min, time.min, tzinfo=timezone.utc)
    hi = datetime.combine(end or date.max, time(23, 59, 59), tzinfo=timezone.utc)
    return lo, hi


def write_jsonl(records: Sequence[MessageRecord], fh) -> None:
    for rec in records:
        obj = {
            "id": rec.message_id,
            "user": rec.author,
            "hashtags": list(rec.hashtags),
            "timestamp": rec.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
        }
        fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _as_utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _dedupe(tags: Iterable[str]) -> list[str]:
    seen = {}
    for t in tags:
        if t and t not in seen:
            seen[t] = None
    return list(seen)
