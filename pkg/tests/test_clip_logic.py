from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from uvcurate.clip_logic import (
    ClipRecord, ClipSet, classify, clip_id, extract_shorts_from_long, subclip_sample, window_frames,
)
from uvcurate.errors import NonPositiveDuration, NotLongClip


def record(n_frames, fps=(30, 1), start=0):
    return ClipRecord(clip_id("src", start, start + n_frames), "src", start, start + n_frames,
                      fps[0], fps[1], 3840, 2160)


@pytest.mark.parametrize("d, expected", [
    (2.9, ClipSet.DISCARD), (3.0, ClipSet.SHORT), (5.3, ClipSet.SHORT), (10.0, ClipSet.SHORT),
    (10.1, ClipSet.LONG), (45, ClipSet.LONG), (Fraction(1001, 100), ClipSet.LONG),
])
def test_classify(d, expected):
    assert classify(d) is expected


@pytest.mark.parametrize("d", [0, -1.5])
def test_classify_non_positive(d):
    with pytest.raises(NonPositiveDuration):
        classify(d)


def test_record_duration_is_exact():
    r = record(300, (30000, 1001))
    assert r.duration == Fraction(1001, 100)
    assert r.set is ClipSet.LONG
    assert ClipRecord.from_dict(r.to_dict()) == r


def test_long_45s_gives_centre_window():
    [c] = extract_shorts_from_long(record(45 * 30))
    assert (c.start_frame, c.end_frame) == (525, 825)
    assert c.set is ClipSet.SHORT and c.parent_id == "src_0000000_0001350"


def test_long_90s_gives_three_windows():
    clips = extract_shorts_from_long(record(90 * 30))
    assert [(c.start_frame, c.end_frame) for c in clips] == [(0, 300), (1200, 1500), (2400, 2700)]


def test_long_61s_windows_are_disjoint():
    clips = extract_shorts_from_long(record(61 * 30))
    spans = sorted((c.start_frame, c.end_frame) for c in clips)
    assert len(spans) == 3
    assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))


def test_quarter_anchor():
    clips = extract_shorts_from_long(record(120 * 30), "quarter_centers")
    assert [(c.start_frame, c.end_frame) for c in clips] == [(750, 1050), (1650, 1950), (2550, 2850)]


def test_extract_rejects_short():
    with pytest.raises(NotLongClip):
        extract_shorts_from_long(record(150))


@given(st.integers(301, 20000), st.sampled_from([(24, 1), (25, 1), (30000, 1001), (60, 1), (50, 1)]),
       st.integers(0, 1000), st.sampled_from(["edges", "quarter_centers"]))
def test_extract_invariants(n, fps, start, anchor):
    long_clip = record(n, fps, start)
    if long_clip.set is not ClipSet.LONG:
        return
    length = window_frames(Fraction(*fps))
    assert length == int(10 * Fraction(*fps))
    for c in extract_shorts_from_long(long_clip, anchor):
        assert long_clip.start_frame <= c.start_frame < c.end_frame <= long_clip.end_frame
        assert c.n_frames == length
        assert classify(c.duration) is ClipSet.SHORT


@pytest.mark.parametrize("n, t, expected", [(100, 81, (9, 90)), (81, 81, (0, 81)), (50, 81, (0, 50))])
def test_subclip_examples(n, t, expected):
    assert subclip_sample(n, t) == expected


@given(st.integers(1, 5000), st.integers(1, 5000))
def test_subclip_centred(n, t):
    a, b = subclip_sample(n, t)
    assert b - a == min(n, t)
    assert 0 <= a and b <= n
    assert abs(a - (n - b)) <= 1
