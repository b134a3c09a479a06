"""Commit-log ingestion: parse, canonicalize, filter, sanitize and sort.

The input is a headerless UTF-8 TSV with one commit per line::

    commit_id <TAB> author <TAB> project <TAB> unix_seconds <TAB> path1;path2;...

The sorted output is produced with an external merge sort so that the
stream never has to fit in memory at once.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import os
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

EPOCH_MIN_DEFAULT = 31536000  # 1971-01-01T00:00:00Z
DEFAULT_MIN_ECOSYSTEM_COMMITS = 1_000_000
DEFAULT_MEMORY_BUDGET = 512 * 1024 * 1024

# rough per-record overhead of a CommitRecord held in a Python list
_RECORD_OVERHEAD = 240


class IngestError(Exception):
    """Raised for unreadable inputs and malformed map/config files."""


class ParseError(IngestError):
    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno
        self.reason = reason


@dataclass(frozen=True, slots=True)
class CommitRecord:
    commit_id: str
    author_key: str
    project_key: str
    timestamp: int
    files: tuple[str, ...]

    def sort_key(self):
        return (self.timestamp, self.commit_id, self.author_key, self.project_key, self.files)

    def to_line(self) -> str:
        return "\t".join(
            (self.commit_id, self.author_key, self.project_key, str(self.timestamp), ";".join(self.files))
        )


@dataclass(frozen=True)
class LanguageConfig:
    language_name: str
    extensions: frozenset[str]
    min_ecosystem_commits: int = DEFAULT_MIN_ECOSYSTEM_COMMITS

    def __post_init__(self):
        if not self.language_name:
            raise IngestError("language config: empty language name")
        if not self.extensions:
            raise IngestError(f"language config {self.language_name!r}: no extensions")
        if any(e != e.lower() or e.startswith(".") or not e for e in self.extensions):
            raise IngestError(
                f"language config {self.language_name!r}: extensions must be lowercase, without dot"
            )


@dataclass
class IngestStats:
    records_read: int = 0
    records_dropped_timestamp: int = 0
    records_dropped_language: int = 0
    parse_failures: int = 0
    records_emitted: int = 0

    def consistent(self) -> bool:
        return self.records_read == (
            self.records_emitted
            + self.records_dropped_timestamp
            + self.records_dropped_language
            + self.parse_failures
        )

    def as_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_dropped_timestamp": self.records_dropped_timestamp,
            "records_dropped_language": self.records_dropped_language,
            "parse_failures": self.parse_failures,
            "records_emitted": self.records_emitted,
        }


@dataclass(frozen=True)
class IdentityMap:
    """Raw identity -> canonical identity (author aliases or fork roots)."""

    entries: dict[str, str] = field(default_factory=dict)

    def resolve(self, key: str) -> str:
        return self.entries.get(key, key)

    def __len__(self):
        return len(self.entries)


# Both maps share one contract; the names document which side they act on.
AliasMap = IdentityMap
ForkMap = IdentityMap


def parse_commit_line(line: str, lineno: int = 0) -> CommitRecord:
    line = line.rstrip("\r\n")
    parts = line.split("\t")
    if len(parts) != 5:
        raise ParseError(lineno, f"expected 5 tab-separated fields, got {len(parts)}")
    commit_id, author, project, ts, files_field = parts
    if not commit_id:
        raise ParseError(lineno, "empty commit id")
    if not author:
        raise ParseError(lineno, "empty author")
    if not project:
        raise ParseError(lineno, "empty project")
    try:
        timestamp = int(ts)
    except ValueError:
        raise ParseError(lineno, f"non-integer timestamp {ts!r}") from None
    files = tuple(files_field.split(";"))
    if any(not f for f in files):
        raise ParseError(lineno, "empty file path")
    return CommitRecord(commit_id, author, project, timestamp, files)


def canonicalize(record: CommitRecord, aliases: IdentityMap, forks: IdentityMap) -> CommitRecord:
    author = aliases.resolve(record.author_key)
    project = forks.resolve(record.project_key)
    if author is record.author_key and project is record.project_key:
        return record
    return replace(record, author_key=author, project_key=project)


def file_extension(path: str) -> str:
    name = path.rsplit("/", 1)[-1]
    dot = name.rfind(".")
    if dot <= 0:
        # no extension, or a dotfile such as ".gitignore"
        return ""
    return name[dot + 1:].lower()


def filter_language(record: CommitRecord, config: LanguageConfig) -> CommitRecord | None:
    """Keep only files of the configured language; ``None`` if nothing is left."""
    exts = config.extensions
    kept = tuple(f for f in record.files if file_extension(f) in exts)
    if not kept:
        return None
    if len(kept) == len(record.files):
        return record
    return replace(record, files=kept)


def sanitize_timestamp(record: CommitRecord, collection_date: int, epoch_min: int = EPOCH_MIN_DEFAULT) -> bool:
    return epoch_min <= record.timestamp <= collection_date


def node_id(name: str) -> str:
    if not name:
        raise ValueError("node name must be non-empty")
    return hashlib.md5(name.encode("utf-8")).hexdigest()


def _load_pairs(path, what: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {what} map {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise IngestError(f"{what} map {path}, line {lineno}: expected 'raw<TAB>canonical'")
            entries[parts[0]] = parts[1]
    return entries


def _close_map(entries: dict[str, str], what: str) -> dict[str, str]:
    """Resolve chains (a->b, b->c) so a single lookup is final; reject cycles."""
    closed = {}
    for raw in entries:
        seen = {raw}
        target = entries[raw]
        while target in entries and entries[target] != target:
            if target in seen:
                raise IngestError(f"{what} map contains a cycle through {raw!r}")
            seen.add(target)
            target = entries[target]
        closed[raw] = target
    return closed


def load_identity_map(path, what: str = "identity") -> IdentityMap:
    return IdentityMap(_close_map(_load_pairs(path, what), what))


def load_alias_map(path) -> IdentityMap:
    return load_identity_map(path, "alias")


def load_fork_map(path) -> IdentityMap:
    return load_identity_map(path, "fork")


def load_language_config(path) -> LanguageConfig:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read language config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise IngestError(f"language config {path}, line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    unknown = set(values) - {"language", "extensions", "min_ecosystem_commits"}
    if unknown:
        raise IngestError(f"language config {path}: unknown keys {sorted(unknown)}")
    if "language" not in values or "extensions" not in values:
        raise IngestError(f"language config {path}: 'language' and 'extensions' are required")
    exts = [e.strip().lower().lstrip(".") for e in values["extensions"].split(",") if e.strip()]
    if len(exts) != len(set(exts)):
        raise IngestError(f"language config {path}: duplicate extensions")
    try:
        threshold = int(values.get("min_ecosystem_commits", DEFAULT_MIN_ECOSYSTEM_COMMITS))
    except ValueError:
        raise IngestError(f"language config {path}: min_ecosystem_commits must be an integer") from None
    return LanguageConfig(values["language"], frozenset(exts), threshold)


def parse_collection_date(text: str) -> int:
    """ISO 8601 date or datetime -> unix seconds. Naive values are taken as UTC."""
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise IngestError(f"bad collection date {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _spill(buffer: list[CommitRecord], tmpdir) -> str:
    buffer.sort(key=CommitRecord.sort_key)
    fd, path = tempfile.mkstemp(prefix="econet-run-", suffix=".tsv", dir=tmpdir)
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        for rec in buffer:
            fh.write(rec.to_line())
            fh.write("\n")
    return path


def _read_run(path: str) -> Iterator[CommitRecord]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            yield parse_commit_line(line)


def external_sort(
    records: Iterable[CommitRecord],
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmpdir=None,
) -> Iterator[CommitRecord]:
    """Sort records by ``(timestamp, commit_id, ...)``, spilling sorted runs to disk.

    Runs are merged with :func:`heapq.merge`; the key covers every field so
    the merged order does not depend on how the input was chunked.
    """
    buffer: list[CommitRecord] = []
    used = 0
    runs: list[str] = []
    try:
        for rec in records:
            buffer.append(rec)
            used += _RECORD_OVERHEAD + len(rec.commit_id) + len(rec.author_key) + len(rec.project_key)
            used += sum(len(f) + 56 for f in rec.files)
            if used >= memory_budget:
                runs.append(_spill(buffer, tmpdir))
                buffer = []
                used = 0
        buffer.sort(key=CommitRecord.sort_key)
        if not runs:
            yield from buffer
            return
        if buffer:
            runs.append(_spill(buffer, tmpdir))
            buffer = []
        log.debug("merging %d sorted runs", len(runs))
        yield from heapq.merge(*(_read_run(p) for p in runs), key=CommitRecord.sort_key)
    finally:
        for p in runs:
            try:
                os.unlink(p)
            except OSError:
                pass


def _normalized(source, aliases, forks, config, collection_date, epoch_min, stats) -> Iterator[CommitRecord]:
    for lineno, line in enumerate(source, 1):
        if not line.strip():
            continue
        stats.records_read += 1
        try:
            rec = parse_commit_line(line, lineno)
        except ParseError as exc:
            stats.parse_failures += 1
            log.warning("skipping malformed commit: %s", exc)
            continue
        if not sanitize_timestamp(rec, collection_date, epoch_min):
            stats.records_dropped_timestamp += 1
            continue
        if config is not None:
            rec = filter_language(rec, config)
            if rec is None:
                stats.records_dropped_language += 1
                continue
        stats.records_emitted += 1
        yield canonicalize(rec, aliases, forks)


def ingest_stream(
    source: Iterable[str],
    aliases: IdentityMap | None = None,
    forks: IdentityMap | None = None,
    config: LanguageConfig | None = None,
    collection_date: int | None = None,
    *,
    epoch_min: int = EPOCH_MIN_DEFAULT,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmpdir=None,
) -> tuple[Iterator[CommitRecord], IngestStats]:
    """Normalize a raw commit log into a sorted record stream.

    Returns the lazily merged stream and its stats object. The stats are
    complete once the stream has been exhausted (the sort consumes the whole
    source before yielding the first record).

    ``config=None`` disables language filtering; ``collection_date=None``
    disables the upper timestamp bound.
    """
    aliases = aliases if aliases is not None else IdentityMap()
    forks = forks if forks is not None else IdentityMap()
    upper = collection_date if collection_date is not None else 2**63 - 1
    if upper <= epoch_min:
        raise IngestError("collection date must be later than epoch_min")
    stats = IngestStats()
    normalized = _normalized(source, aliases, forks, config, upper, epoch_min, stats)
    return external_sort(normalized, memory_budget, tmpdir), stats


def read_lines(path) -> Iterator[str]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read commit log {path}: {exc}") from exc
    with fh:
        yield from fh
