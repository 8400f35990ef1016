"""Stage orchestration over a manifest.

Stages run in order: ingest -> split -> filter -> purify -> caption. Each
stage only picks up entries whose current status is the previous stage's
output, so re-running a stage is a no-op. Clip tasks run on a bounded thread
pool; their results are appended to the manifest sorted by id, so output
never depends on scheduling.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from .captions import caption_clip, prompt_stream
from .clip_logic import ClipRecord, ClipSet, classify, clip_id, extract_shorts_from_long, subclip_sample
from .config import PipelineConfig
from .errors import CurationError, ProviderError, SchemaViolation, ShortClip
from .frame_io import Y4MReader, list_sequence, probe_y4m, read_sequence, read_y4m
from .manifest import Manifest, ManifestEntry, Status, compute_stats, format_stats_table
from .providers import ProviderSet
from .purification import fetch_scores, gate_clip
from .scene_split import EDGE_FRAMES, content_score_hsv, detect_cuts, dissolve_flag, rgb_to_hsv
from .stat_filters import StatisticalFilter

log = logging.getLogger(__name__)

STAGES = ("ingest", "split", "filter", "purify", "caption", "sample", "stats", "synth")
EXIT_OK, EXIT_ERROR, EXIT_DEFERRED = 0, 1, 2


@dataclass
class StageResult:
    stage: str
    processed: int = 0
    changed: int = 0
    rejected: int = 0
    deferred: int = 0
    errors: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.errors:
            return EXIT_ERROR
        return EXIT_DEFERRED if self.deferred else EXIT_OK

    def summary(self) -> str:
        return (f"{self.stage}: processed={self.processed} changed={self.changed} "
                f"rejected={self.rejected} deferred={self.deferred} errors={len(self.errors)}")


class Context:
    """Everything a stage needs besides the manifest."""

    def __init__(self, config: PipelineConfig, manifest: Manifest, providers: ProviderSet | None = None,
                 strict_providers: bool = False):
        self.config = config
        self.manifest = manifest
        self.providers = providers or ProviderSet()
        self.strict_providers = strict_providers
        self.root = manifest.path.parent

    def media_path(self, entry: ManifestEntry) -> Path:
        p = Path(entry.media)
        return p if p.is_absolute() else self.root / p

    def relative_media(self, path: Path) -> str:
        try:
            return Path(os.path.relpath(path.resolve(), self.root.resolve())).as_posix()
        except ValueError:
            return str(path.resolve())

    def read_frames(self, entry: ManifestEntry, start: int, stop: int):
        path = self.media_path(entry)
        if path.is_dir():
            opts = self.config.pipeline
            return read_sequence(path, (opts.sequence_fps_num, opts.sequence_fps_den), start, stop)[1]
        return read_y4m(path, start, stop)[1]


def _map(ctx: Context, fn: Callable, items: list):
    with ThreadPoolExecutor(max_workers=ctx.config.pipeline.workers) as pool:
        return list(pool.map(fn, items))


def _pending(ctx: Context, status: Status, kind: str = "clip") -> list[ManifestEntry]:
    return sorted((e for e in ctx.manifest.latest().values() if e.kind == kind and e.status is status),
                  key=lambda e: e.id)


def _commit(ctx: Context, result: StageResult, entries: Iterable[ManifestEntry]):
    for e in sorted(entries, key=lambda e: e.id):
        ctx.manifest.append(e)
        result.changed += 1
        result.rejected += e.status is Status.REJECTED
        result.deferred += e.status is Status.DEFERRED


def _provider_failure(ctx: Context, entry: ManifestEntry, err: Exception) -> ManifestEntry:
    if ctx.strict_providers:
        raise err
    log.warning("deferring %s: %s", entry.id, err)
    return replace(entry, status=Status.DEFERRED, reject_reasons=[f"provider: {err}"])


# -- stages -------------------------------------------------------------------------

def ingest(ctx: Context, corpus: str | os.PathLike, theme_tags: list[str] | None = None) -> StageResult:
    """Register every ``*.y4m`` file and ``frame_%06d`` directory under ``corpus``."""
    result = StageResult("ingest")
    corpus = Path(corpus)
    if not corpus.is_dir():
        result.errors.append(f"corpus directory {corpus} not found")
        return result
    sources = sorted(corpus.rglob("*.y4m"))
    sources += sorted(d for d in corpus.rglob("*") if d.is_dir() and list_sequence(d))
    new = []
    for path in sources:
        sid = path.relative_to(corpus).with_suffix("").as_posix().replace("/", "__")
        if ctx.manifest.get(sid) is not None:
            continue
        result.processed += 1
        try:
            if path.is_dir():
                opts = ctx.config.pipeline
                meta, _ = read_sequence(path, (opts.sequence_fps_num, opts.sequence_fps_den), 0, 1)
            else:
                meta = probe_y4m(path)
            if not meta.frame_count:
                raise CurationError("stream holds no frames")
        except (CurationError, OSError) as e:
            result.errors.append(f"{path}: {e}")
            continue
        record = ClipRecord(sid, sid, 0, meta.frame_count, meta.fps_num, meta.fps_den, meta.width, meta.height)
        new.append(ManifestEntry(sid, "source", Status.INGESTED, record, media=ctx.relative_media(path),
                                 stream=meta.summary(), theme_tags=list(theme_tags or [])))
    _commit(ctx, result, new)
    return result


def _scores_for_source(ctx: Context, entry: ManifestEntry):
    path = ctx.media_path(entry)
    scores = []
    prev = None
    if path.is_dir():
        frames = ctx.read_frames(entry, 0, None)
    else:
        reader = Y4MReader.open(path)
        frames = reader
    try:
        for frame in frames:
            hsv = rgb_to_hsv(frame.rgb)
            scores.append(0.0 if prev is None else content_score_hsv(prev, hsv))
            prev = hsv
    finally:
        if not path.is_dir():
            reader.close()
    return scores


def _split_one(ctx: Context, source: ManifestEntry) -> list[ManifestEntry]:
    cfg = ctx.config
    cuts = detect_cuts(_scores_for_source(ctx, source), cfg.split)
    rec = source.clip
    out = [replace(source, status=Status.SPLIT, cuts=cuts)]
    for a, b in cuts.segments():
        record = ClipRecord(clip_id(rec.source_id, a, b), rec.source_id, a, b, rec.fps_num, rec.fps_den,
                            rec.width, rec.height, parent_id=source.id)
        entry = ManifestEntry(record.id, "clip", Status.SPLIT, record, media=source.media, stream=source.stream,
                              theme_tags=list(source.theme_tags))
        if record.set is ClipSet.DISCARD:
            out.append(replace(entry, status=Status.REJECTED, reject_reasons=["duration"]))
            continue
        if "embedding" in ctx.providers and record.n_frames >= 2 * EDGE_FRAMES:
            frames = (ctx.read_frames(source, a, a + EDGE_FRAMES)
                      + ctx.read_frames(source, b - EDGE_FRAMES, b))
            embed = lambda fs, cid=record.id: ctx.providers.request(  # noqa: E731
                "embedding", cid, fs, {"source_id": rec.source_id})
            try:
                entry = replace(entry, dissolve=dissolve_flag(frames, embed, cfg.split))
                if entry.dissolve["flagged"] and cfg.pipeline.reject_dissolve:
                    entry = replace(entry, status=Status.REJECTED, reject_reasons=["dissolve"])
            except ProviderError as e:
                if cfg.pipeline.reject_dissolve:
                    entry = _provider_failure(ctx, entry, e)
                else:
                    entry = replace(entry, dissolve={"error": str(e)})
            except ShortClip:
                pass
        out.append(entry)
        if record.set is ClipSet.LONG and entry.status is Status.SPLIT:
            for short in extract_shorts_from_long(record, cfg.pipeline.side_anchor):
                out.append(replace(entry, id=short.id, clip=short, dissolve=None))
    return out


def split(ctx: Context) -> StageResult:
    result = StageResult("split")
    sources = _pending(ctx, Status.INGESTED, "source")
    result.processed = len(sources)
    batches = _map(ctx, lambda s: _split_one(ctx, s), sources)
    _commit(ctx, result, [e for batch in batches for e in batch])
    return result


def _filter_one(ctx: Context, entry: ManifestEntry) -> ManifestEntry:
    cfg = ctx.config
    rec = entry.clip
    frames = ctx.read_frames(entry, rec.start_frame, rec.end_frame)
    est = StatisticalFilter.from_thresholds(cfg.stat)
    boxes = None
    if cfg.pipeline.text_detection == "provider":
        k = cfg.stat.text_sample_interval
        positions = list(range(0, len(frames), k))
        try:
            found = ctx.providers.request("textboxes", entry.id, [frames[p] for p in positions],
                                          {"source_id": rec.source_id})
        except ProviderError as e:
            return _provider_failure(ctx, entry, e)
        boxes = dict(zip(positions, found))
    report = est.report(frames, boxes)
    failed = report.failed()
    if failed:
        return replace(entry, status=Status.REJECTED, filters=report,
                       reject_reasons=[f"filter:{name}" for name in failed])
    return replace(entry, status=Status.FILTERED, filters=report)


def filter_stage(ctx: Context) -> StageResult:
    result = StageResult("filter")
    clips = _pending(ctx, Status.SPLIT)
    result.processed = len(clips)
    _commit(ctx, result, _map(ctx, lambda e: _filter_one(ctx, e), clips))
    return result


def _purify_one(ctx: Context, entry: ManifestEntry) -> ManifestEntry:
    rec = entry.clip
    frames = ctx.read_frames(entry, rec.start_frame, rec.end_frame)
    text = entry.captions.summarized if entry.captions is not None else ""
    try:
        scores = fetch_scores(entry.id, frames, ctx.providers, ctx.config.purify, caption_text=text,
                              source_id=rec.source_id)
    except ProviderError as e:
        return _provider_failure(ctx, entry, e)
    passed, reasons = gate_clip(scores, ctx.config.purify)
    if not passed:
        return replace(entry, status=Status.REJECTED, scores=scores, reject_reasons=reasons)
    return replace(entry, status=Status.PURIFIED, scores=scores)


def purify(ctx: Context) -> StageResult:
    result = StageResult("purify")
    clips = _pending(ctx, Status.FILTERED)
    result.processed = len(clips)
    _commit(ctx, result, _map(ctx, lambda e: _purify_one(ctx, e), clips))
    return result


def _caption_one(ctx: Context, entry: ManifestEntry) -> ManifestEntry:
    rec = entry.clip
    frames = ctx.read_frames(entry, rec.start_frame, rec.end_frame)
    try:
        captions = caption_clip(entry.id, frames, ctx.providers, ctx.config.pipeline.caption_frames,
                                source_id=rec.source_id)
    except (ProviderError, SchemaViolation, CurationError) as e:
        return _provider_failure(ctx, entry, e)
    return replace(entry, status=Status.CAPTIONED, captions=captions)


def caption(ctx: Context) -> StageResult:
    result = StageResult("caption")
    clips = _pending(ctx, Status.PURIFIED)
    result.processed = len(clips)
    _commit(ctx, result, _map(ctx, lambda e: _caption_one(ctx, e), clips))
    return result


def sample(ctx: Context, out) -> StageResult:
    """Write training prompts and centred sub-clip ranges as JSONL to ``out``."""
    result = StageResult("sample")
    opts = ctx.config.pipeline
    for entry in _pending(ctx, Status.CAPTIONED):
        result.processed += 1
        rec = entry.clip
        a, b = subclip_sample(rec.n_frames, opts.target_frames)
        for i, prompt in enumerate(prompt_stream(entry.captions, opts.seed, entry.id,
                                                 opts.samples_per_clip, opts.prompt_labels)):
            line = {"clip_id": entry.id, "source_id": rec.source_id, "draw": i,
                    "frame_range": [rec.start_frame + a, rec.start_frame + b], **prompt.to_dict()}
            out.write(json.dumps(line, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n")
    return result


def stats(ctx: Context, out_path: str | os.PathLike | None = None) -> tuple[StageResult, dict]:
    report = compute_stats(ctx.manifest.latest().values())
    path = Path(out_path) if out_path else ctx.root / "stats.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(format_stats_table(report))
    return StageResult("stats", processed=report["total_clips"]), report


def run_stage(stage: str, ctx: Context, **kwargs) -> StageResult:
    if stage == "ingest":
        return ingest(ctx, kwargs["corpus"], kwargs.get("theme_tags"))
    if stage == "split":
        return split(ctx)
    if stage == "filter":
        return filter_stage(ctx)
    if stage == "purify":
        return purify(ctx)
    if stage == "caption":
        return caption(ctx)
    if stage == "sample":
        return sample(ctx, kwargs["out"])
    if stage == "stats":
        return stats(ctx, kwargs.get("out_path"))[0]
    raise ValueError(f"unknown stage {stage!r}")


def run_all(ctx: Context, corpus: str | os.PathLike) -> list[StageResult]:
    """ingest through caption in one go."""
    results = [ingest(ctx, corpus)]
    for fn in (split, filter_stage, purify, caption):
        results.append(fn(ctx))
    return results
