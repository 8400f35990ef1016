"""Append-only JSONL manifest of curation state.

Every state change of a clip is a new canonical JSON line (sorted keys, no
insignificant whitespace, UTF-8). The latest line for an id is its current
state. Lines are written whole, flushed and fsynced under a lock, so readers
only ever see complete lines; an unterminated trailing line is ignored.
"""

from __future__ import annotations

import enum
import json
import os
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .captions import StructuredCaption
from .clip_logic import ClipRecord
from .errors import SchemaViolation
from .purification import ScoreSet
from .scene_split import CutList
from .stat_filters import FilterReport

SCHEMA_VERSION = 1


class Status(str, enum.Enum):
    INGESTED = "ingested"
    SPLIT = "split"
    FILTERED = "filtered"
    PURIFIED = "purified"
    CAPTIONED = "captioned"
    REJECTED = "rejected"
    DEFERRED = "deferred"

    @property
    def terminal(self) -> bool:
        return self in (Status.REJECTED, Status.DEFERRED)

    @property
    def rank(self) -> int:
        return _RANK[self]


_RANK = {s: i for i, s in enumerate(Status)}


def can_transition(old: Status, new: Status) -> bool:
    if old.terminal:
        return new is old
    if new.terminal:
        return True
    return new.rank >= old.rank


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


@dataclass
class ManifestEntry:
    id: str
    kind: str
    status: Status
    clip: ClipRecord
    media: str | None = None
    stream: dict | None = None
    cuts: CutList | None = None
    dissolve: dict | None = None
    filters: FilterReport | None = None
    scores: ScoreSet | None = None
    captions: StructuredCaption | None = None
    reject_reasons: list[str] = field(default_factory=list)
    theme_tags: list[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "ManifestEntry":
        if not isinstance(self.status, Status):
            try:
                self.status = Status(self.status)
            except ValueError:
                raise SchemaViolation(f"{self.id}: unknown status {self.status!r}") from None
        if self.kind not in ("source", "clip"):
            raise SchemaViolation(f"{self.id}: kind must be 'source' or 'clip'")
        if self.status is Status.REJECTED and not self.reject_reasons:
            raise SchemaViolation(f"{self.id}: rejected entries need at least one reason")
        if self.clip.id != self.id:
            raise SchemaViolation(f"{self.id}: clip record id {self.clip.id!r} differs")
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaViolation(f"{self.id}: unsupported schema_version {self.schema_version}")
        return self

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "id": self.id,
            "kind": self.kind,
            "status": self.status.value,
            "clip": self.clip.to_dict(),
            "media": self.media,
            "stream": self.stream,
            "cuts": None if self.cuts is None else self.cuts.to_dict(),
            "dissolve": self.dissolve,
            "filters": None if self.filters is None else self.filters.to_dict(),
            "scores": None if self.scores is None else self.scores.to_dict(),
            "captions": None if self.captions is None else self.captions.to_dict(),
            "reject_reasons": list(self.reject_reasons),
            "theme_tags": list(self.theme_tags),
        }

    def to_json(self) -> str:
        return canonical_json(self.validate().to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "ManifestEntry":
        try:
            entry = cls(
                id=d["id"],
                kind=d["kind"],
                status=Status(d["status"]),
                clip=ClipRecord.from_dict(d["clip"]),
                media=d.get("media"),
                stream=d.get("stream"),
                cuts=None if d.get("cuts") is None else CutList.from_dict(d["cuts"]),
                dissolve=d.get("dissolve"),
                filters=None if d.get("filters") is None else FilterReport.from_dict(d["filters"]),
                scores=None if d.get("scores") is None else ScoreSet.from_dict(d["scores"]),
                captions=None if d.get("captions") is None else StructuredCaption.from_dict(d["captions"]),
                reject_reasons=list(d.get("reject_reasons", [])),
                theme_tags=list(d.get("theme_tags", [])),
                schema_version=d["schema_version"],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaViolation(f"malformed manifest entry: {e}") from e
        return entry.validate()


@dataclass
class ReadResult:
    entries: list[ManifestEntry]
    errors: list[tuple[int, str]]


def read_all(path: str | os.PathLike) -> ReadResult:
    """Parse every line; malformed lines are reported with their line number."""
    entries, errors = [], []
    with open(path, "rb") as fh:
        data = fh.read()
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    elif lines:
        # unterminated tail: a write still in flight
        errors.append((len(lines), "incomplete trailing line"))
        lines.pop()
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        try:
            entries.append(ManifestEntry.from_dict(json.loads(raw.decode("utf-8"))))
        except (ValueError, UnicodeDecodeError) as e:
            errors.append((lineno, str(e)))
    return ReadResult(entries, errors)


def latest_by_id(entries: Iterable[ManifestEntry]) -> dict[str, ManifestEntry]:
    latest: dict[str, ManifestEntry] = {}
    for e in entries:
        latest[e.id] = e
    return latest


class Manifest:
    """Single-writer handle on a manifest file."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._latest: dict[str, ManifestEntry] = {}
        if self.path.exists():
            result = read_all(self.path)
            self.load_errors = result.errors
            self._latest = latest_by_id(result.entries)
        else:
            self.load_errors = []

    def latest(self) -> dict[str, ManifestEntry]:
        return dict(self._latest)

    def get(self, entry_id: str) -> ManifestEntry | None:
        return self._latest.get(entry_id)

    def append(self, entry: ManifestEntry):
        line = entry.to_json()
        with self._lock:
            prev = self._latest.get(entry.id)
            if prev is not None and not can_transition(prev.status, entry.status):
                raise SchemaViolation(
                    f"{entry.id}: status may not move from {prev.status.value} to {entry.status.value}")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._latest[entry.id] = entry

    def append_many(self, entries: Iterable[ManifestEntry]):
        for e in entries:
            self.append(e)


def build_index(path: str | os.PathLike) -> Path:
    """Write ``<manifest>.idx`` mapping each id to the byte offset of its latest line."""
    offsets: dict[str, int] = {}
    pos = 0
    with open(path, "rb") as fh:
        for raw in fh:
            if raw.endswith(b"\n"):
                try:
                    offsets[json.loads(raw)["id"]] = pos
                except (ValueError, KeyError, TypeError):
                    pass
            pos += len(raw)
    idx = Path(str(path) + ".idx")
    idx.write_text(canonical_json(offsets) + "\n", encoding="utf-8")
    return idx


def lookup(path: str | os.PathLike, entry_id: str) -> ManifestEntry | None:
    idx = Path(str(path) + ".idx")
    if not idx.exists():
        build_index(path)
    offsets = json.loads(idx.read_text(encoding="utf-8"))
    if entry_id not in offsets:
        return None
    with open(path, "rb") as fh:
        fh.seek(offsets[entry_id])
        return ManifestEntry.from_dict(json.loads(fh.readline()))


# -- statistics ------------------------------------------------------------------

RES_CLASSES = ("8K", "4K", "other")
FPS_BUCKETS = ("<=30", "30-50", ">=50")
SETS = ("Short", "Long", "Discard")
HIST_BIN = 25


def resolution_class(width: int) -> str:
    if width >= 7680:
        return "8K"
    if width >= 3840:
        return "4K"
    return "other"


def fps_bucket(fps: float) -> str:
    if fps <= 30:
        return "<=30"
    if fps < 50:
        return "30-50"
    return ">=50"


def compute_stats(entries: Iterable[ManifestEntry], bin_width: int = HIST_BIN) -> dict:
    """Summary statistics over the current state of every clip.

    ``buckets[set][resolution][fps]`` counts non-rejected clips; caption
    histograms bin whitespace word counts per field (``missing`` counts
    non-rejected clips without captions).
    """
    latest = [e for e in latest_by_id(entries).values() if e.kind == "clip"]
    buckets = {s: {r: {f: 0 for f in FPS_BUCKETS} for r in RES_CLASSES} for s in SETS}
    status_counts = Counter(e.status.value for e in latest)
    rejections: Counter = Counter()
    themes: Counter = Counter()
    fields_ = [*StructuredCaption.__dataclass_fields__, "total"]
    hist: dict[str, Counter] = {f: Counter() for f in fields_}
    word_sums = Counter()
    captioned = 0
    missing = 0
    kept = 0
    for e in latest:
        if e.status is Status.REJECTED:
            rejections.update(e.reject_reasons)
            continue
        kept += 1
        c = e.clip
        buckets[c.set.value][resolution_class(c.width)][fps_bucket(float(c.fps))] += 1
        themes.update(e.theme_tags)
        if e.captions is None:
            missing += 1
            continue
        captioned += 1
        counts = dict(e.captions.word_counts, total=e.captions.total_words)
        for name, n in counts.items():
            hist[name][str(n // bin_width * bin_width)] += 1
            word_sums[name] += n
    return {
        "total_clips": len(latest),
        "kept_clips": kept,
        "status_counts": dict(sorted(status_counts.items())),
        "buckets": buckets,
        "rejections": dict(sorted(rejections.items())),
        "themes": dict(sorted(themes.items())),
        "caption_categories": len(fields_) - 1,
        "captions": {
            "captioned": captioned,
            "missing": missing,
            "bin_width": bin_width,
            "histograms": {k: dict(sorted(v.items(), key=lambda kv: int(kv[0]))) for k, v in hist.items()},
            "mean_words": {k: (word_sums[k] / captioned if captioned else 0.0) for k in fields_},
        },
    }


def format_stats_table(stats: Mapping) -> str:
    lines = [f"{'set':<8}{'res':<7}" + "".join(f"{b:>9}" for b in FPS_BUCKETS) + f"{'all':>9}"]
    for s in SETS:
        for r in RES_CLASSES:
            row = stats["buckets"][s][r]
            if not any(row.values()):
                continue
            lines.append(f"{s:<8}{r:<7}" + "".join(f"{row[b]:>9}" for b in FPS_BUCKETS) + f"{sum(row.values()):>9}")
    lines.append(f"kept {stats['kept_clips']} of {stats['total_clips']} clips")
    for reason, n in stats["rejections"].items():
        lines.append(f"  rejected[{reason}] = {n}")
    mean_total = stats["captions"]["mean_words"]["total"]
    if stats["captions"]["captioned"]:
        lines.append(f"captioned {stats['captions']['captioned']}, mean {mean_total:.1f} words "
                     f"over {stats['caption_categories']} caption fields")
    return "\n".join(lines)
