import json
import threading

import pytest
from hypothesis import given, strategies as st

from uvcurate.captions import StructuredCaption
from uvcurate.clip_logic import ClipRecord, clip_id
from uvcurate.errors import SchemaViolation
from uvcurate.manifest import (
    Manifest, ManifestEntry, Status, build_index, can_transition, compute_stats, format_stats_table,
    lookup, read_all,
)
from uvcurate.providers import CAPTION_FIELDS


def entry(i=0, status=Status.SPLIT, width=3840, fps=(30, 1), n=150, reasons=(), captions=None):
    rec = ClipRecord(clip_id("s", i * 1000, i * 1000 + n), "s", i * 1000, i * 1000 + n, fps[0], fps[1], width, 2160)
    return ManifestEntry(rec.id, "clip", status, rec, reject_reasons=list(reasons), captions=captions)


def test_append_grows_by_one_line(tmp_path):
    m = Manifest(tmp_path / "m.jsonl")
    m.append(entry())
    assert (tmp_path / "m.jsonl").read_bytes().count(b"\n") == 1
    m.append(entry(status=Status.FILTERED))
    assert (tmp_path / "m.jsonl").read_bytes().count(b"\n") == 2


def test_rejected_needs_reasons(tmp_path):
    with pytest.raises(SchemaViolation):
        Manifest(tmp_path / "m.jsonl").append(entry(status=Status.REJECTED))


def test_round_trip_and_canonical_bytes(tmp_path):
    path = tmp_path / "m.jsonl"
    m = Manifest(path)
    caps = StructuredCaption(**{n: "ünïcode words" for n in CAPTION_FIELDS}, summarized="s")
    originals = [entry(0), entry(1, status=Status.CAPTIONED, captions=caps),
                 entry(2, status=Status.REJECTED, reasons=["filter:border"])]
    m.append_many(originals)
    result = read_all(path)
    assert result.errors == []
    assert [e.to_dict() for e in result.entries] == [e.to_dict() for e in originals]
    assert "".join(e.to_json() + "\n" for e in result.entries).encode("utf-8") == path.read_bytes()
    line = path.read_text(encoding="utf-8").splitlines()[1]
    assert ": " not in line and ", " not in line.replace("ünïcode words", "")
    assert list(json.loads(line)) == sorted(json.loads(line))


def test_read_all_skips_corrupt_lines(tmp_path):
    path = tmp_path / "m.jsonl"
    lines = [entry(i).to_json() for i in range(3)]
    path.write_text(lines[0] + "\n{not json\n" + lines[1] + "\n" + lines[2] + "\n", encoding="utf-8")
    result = read_all(path)
    assert len(result.entries) == 3
    assert [n for n, _ in result.errors] == [2]


def test_read_all_empty_and_unterminated(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text("")
    assert read_all(path).entries == []
    path.write_text(entry().to_json() + "\n" + entry(1).to_json()[:20])
    r = read_all(path)
    assert len(r.entries) == 1 and len(r.errors) == 1


def test_status_monotonic(tmp_path):
    m = Manifest(tmp_path / "m.jsonl")
    m.append(entry(status=Status.PURIFIED))
    with pytest.raises(SchemaViolation):
        m.append(entry(status=Status.FILTERED))
    m.append(entry(status=Status.DEFERRED, reasons=["provider: down"]))
    with pytest.raises(SchemaViolation):
        m.append(entry(status=Status.CAPTIONED))


@given(st.sampled_from(list(Status)), st.sampled_from(list(Status)))
def test_transition_rule(old, new):
    allowed = can_transition(old, new)
    if old.terminal:
        assert allowed == (new is old)
    elif not new.terminal:
        assert allowed == (new.rank >= old.rank)


def test_concurrent_appends_keep_whole_lines(tmp_path):
    m = Manifest(tmp_path / "m.jsonl")
    threads = [threading.Thread(target=lambda k=k: [m.append(entry(k * 50 + j)) for j in range(50)]) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    r = read_all(tmp_path / "m.jsonl")
    assert len(r.entries) == 200 and r.errors == []


def test_index_lookup(tmp_path):
    path = tmp_path / "m.jsonl"
    m = Manifest(path)
    m.append(entry(0))
    m.append(entry(1))
    m.append(entry(0, status=Status.FILTERED))
    build_index(path)
    assert lookup(path, entry(0).id).status is Status.FILTERED
    assert lookup(path, "missing") is None


def test_stats_fixture_buckets():
    # proportions mirror the short-set rows of the published resolution/FPS table, scaled down
    counts = {(3840, (30, 1)): 247, (3840, (60, 1)): 80, (7680, (24, 1)): 63, (7680, (50, 1)): 32,
              (1920, (40, 1)): 5}
    entries, i = [], 0
    for (w, fps), c in counts.items():
        for _ in range(c):
            entries.append(entry(i, width=w, fps=fps, n=5 * fps[0]))
            i += 1
    entries.append(entry(i, status=Status.REJECTED, reasons=["motion"]))
    stats = compute_stats(entries)
    b = stats["buckets"]["Short"]
    assert b["4K"] == {"<=30": 247, "30-50": 0, ">=50": 80}
    assert b["8K"] == {"<=30": 63, "30-50": 0, ">=50": 32}
    assert b["other"]["30-50"] == 5
    total = sum(v for s in stats["buckets"].values() for r in s.values() for v in r.values())
    assert total == stats["kept_clips"] == 427
    assert stats["rejections"] == {"motion": 1}
    assert stats["caption_categories"] == 10
    assert "Short" in format_stats_table(stats)


def test_stats_single_bucket_and_empty():
    stats = compute_stats([entry(i) for i in range(7)])
    assert stats["buckets"]["Short"]["4K"]["<=30"] == 7
    empty = compute_stats([])
    assert empty["kept_clips"] == 0
    assert all(v == 0 for s in empty["buckets"].values() for r in s.values() for v in r.values())


def test_stats_caption_histograms():
    caps = StructuredCaption(**{n: "w " * 30 for n in CAPTION_FIELDS}, summarized="w " * 60)
    stats = compute_stats([entry(0, status=Status.CAPTIONED, captions=caps), entry(1)])
    h = stats["captions"]
    assert h["captioned"] == 1 and h["missing"] == 1
    assert h["histograms"]["brief"] == {"25": 1}
    assert h["histograms"]["total"] == {"325": 1}
