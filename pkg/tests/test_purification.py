import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from uvcurate.errors import IncompleteScores, ProviderUnavailable, TooFewFrames
from uvcurate.providers import ATTRIBUTES, MockProvider, ProviderSet, default_mock_handlers, mock_provider_set
from uvcurate.purification import (
    MotionScorer, PurificationGate, PurifyThresholds, ScoreSet, block_motion_field, downscale_nearest,
    fetch_scores, gate_clip, motion_pairs, motion_score, pair_motion,
)
from conftest import make_frames


def clean_scores(**kw):
    base = dict(vtss=0.05, motion=5.0, caption_sim=0.3, attributes={a: False for a in ATTRIBUTES})
    base.update(kw)
    return ScoreSet(**base)


def shifted_pair(h, w, dy, dx, seed=0):
    canvas = np.random.default_rng(seed).integers(0, 256, (h + 20, w + 20), dtype=np.uint8)
    prev = canvas[10:10 + h, 10:10 + w]
    cur = canvas[10 - dy:10 - dy + h, 10 - dx:10 - dx + w]
    return prev, cur


def test_registry_has_sixteen_stable_names():
    assert len(ATTRIBUTES) == 16 and len(set(ATTRIBUTES)) == 16
    assert ATTRIBUTES[0] == "Subtitles" and ATTRIBUTES[4] == "TransitionEffects" and ATTRIBUTES[-1] == "Other"


def test_default_thresholds():
    t = PurifyThresholds()
    assert (t.vtss_min, t.motion_min, t.motion_max, t.caption_sim_min) == (0.01, 0.1, 100.0, 0.2)
    assert (t.flow_sample_interval, t.flow_downscale) == (8, 512)


def test_gate_examples():
    assert gate_clip(clean_scores()) == (True, [])
    assert gate_clip(clean_scores(vtss=0.005)) == (False, ["vtss"])
    attrs = {a: a == "Watermarks" for a in ATTRIBUTES}
    assert gate_clip(clean_scores(attributes=attrs)) == (False, ["attribute:Watermarks"])
    assert gate_clip(clean_scores(motion=0.0, caption_sim=0.1))[1] == ["motion", "caption_sim"]


def test_gate_boundaries_pass():
    assert gate_clip(clean_scores(vtss=0.01, motion=0.1, caption_sim=0.2))[0]
    assert gate_clip(clean_scores(motion=100.0))[0]
    assert not gate_clip(clean_scores(motion=100.0001))[0]


def test_gate_incomplete():
    with pytest.raises(IncompleteScores):
        gate_clip(ScoreSet(vtss=0.05, motion=1.0, caption_sim=0.3, attributes={}))
    with pytest.raises(IncompleteScores):
        gate_clip(ScoreSet(vtss=None, motion=1.0, caption_sim=0.3, attributes={a: False for a in ATTRIBUTES}))


def test_scoreset_vector_round_trip():
    s = clean_scores(attributes={a: a == "GreenScreen" for a in ATTRIBUTES})
    assert ScoreSet.from_vector(s.to_vector()) == s
    assert ScoreSet.from_dict(s.to_dict()) == s


@given(st.floats(0, 1), st.floats(0, 200), st.floats(-1, 1),
       st.lists(st.booleans(), min_size=16, max_size=16))
def test_reasons_empty_iff_pass(v, m, c, attrs):
    ok, reasons = gate_clip(clean_scores(vtss=v, motion=m, caption_sim=c, attributes=dict(zip(ATTRIBUTES, attrs))))
    assert ok == (not reasons)


def test_identical_frames_give_zero_motion():
    f = np.random.default_rng(1).integers(0, 256, (64, 64, 3), dtype=np.uint8)
    assert motion_score(make_frames([f] * 10)) == 0.0


@pytest.mark.parametrize("dy, dx", [(0, 3), (2, 0), (-1, 4), (3, -3)])
def test_translation_interior_blocks(dy, dx):
    prev, cur = shifted_pair(80, 96, dy, dx)
    field = block_motion_field(prev, cur)
    assert field.shape == (5, 6, 2)
    assert np.all(field[1:-1, 1:-1] == (dy, dx))


def test_block_field_matches_bruteforce_oracle():
    g = np.random.default_rng(8)
    for _ in range(3):
        prev = g.integers(0, 256, (48, 48), dtype=np.uint8)
        cur = np.roll(prev, (int(g.integers(-3, 4)), int(g.integers(-3, 4))), axis=(0, 1))
        cur[:16, :16] = g.integers(0, 256, (16, 16))
        assert np.array_equal(block_motion_field(prev, cur), oracles.block_field_bruteforce(prev, cur))


def test_tie_break_prefers_smallest_displacement():
    flat = np.full((48, 48), 90, np.uint8)
    assert np.all(block_motion_field(flat, flat) == 0)


def test_moving_quadrant_mean():
    # 64x64 = 4x4 blocks; the 2x2 blocks at rows 0-1, cols 1-2 shift right by 4 px
    big = np.random.default_rng(12).integers(0, 256, (64, 72), dtype=np.uint8)
    prev = big[:, 4:68]
    cur = prev.copy()
    cur[:32, 16:48] = big[:32, 16:48]
    field = block_motion_field(prev, cur)
    assert np.array_equal(field, oracles.block_field_bruteforce(prev, cur))
    assert np.all(field[:2, 1:3] == (0, 4))
    assert np.count_nonzero(np.abs(field).sum(axis=2)) == 4
    assert pair_motion(prev, cur) == 4 * 4 / 16


def test_motion_pairs():
    assert motion_pairs(17, 8) == [(0, 8), (8, 16)]
    assert motion_pairs(5, 8) == [(0, 4)]
    assert motion_pairs(2, 8) == [(0, 1)]
    with pytest.raises(TooFewFrames):
        motion_pairs(1, 8)


def test_downscale_nearest():
    img = np.arange(1024 * 600, dtype=np.uint32).reshape(600, 1024)
    small = downscale_nearest(img, 512)
    assert small.shape == (300, 512)
    assert small[0, 0] == img[1, 1] and small[-1, -1] == img[599, 1023]
    assert downscale_nearest(img[:100, :100], 512) is not None


def test_static_extension_never_raises_score():
    g = np.random.default_rng(30)
    canvas = g.integers(0, 256, (80, 200, 3), dtype=np.uint8)
    frames = [canvas[:, 2 * i:2 * i + 96] for i in range(17)]
    base = motion_score(make_frames(frames))
    extended = motion_score(make_frames(frames + [frames[-1]] * 8))
    assert extended <= base


def test_fetch_scores_passthrough_and_flow_override():
    frames = make_frames([np.full((32, 32, 3), 100, np.uint8)] * 4)
    s = fetch_scores("c", frames, mock_provider_set(vtss=0.07, similarity=0.4))
    assert (s.vtss, s.caption_sim, s.motion) == (0.07, 0.4, 0.0)
    handlers = default_mock_handlers()
    handlers["flow"] = lambda c, f, p: 12.5
    mock = MockProvider(handlers)
    s = fetch_scores("c", frames, ProviderSet({k: mock for k in handlers}))
    assert s.motion == 12.5


def test_fetch_scores_missing_provider():
    frames = make_frames([np.zeros((32, 32, 3), np.uint8)] * 2)
    with pytest.raises(ProviderUnavailable):
        fetch_scores("c", frames, ProviderSet())


def test_estimators():
    g = np.random.default_rng(3)
    canvas = g.integers(0, 256, (64, 120, 3), dtype=np.uint8)
    clip = [canvas[:, i:i + 96] for i in range(0, 18, 2)]
    out = MotionScorer(flow_sample_interval=1).fit_transform([clip])
    assert out.shape == (1, 1) and out[0, 0] > 0
    gate = PurificationGate().fit([clean_scores()])
    X = np.vstack([clean_scores().to_vector(), clean_scores(vtss=0.0).to_vector()])
    assert gate.predict(X).tolist() == [True, False]
    assert gate.reasons(X) == [[], ["vtss"]]
    assert gate.set_params(vtss_min=-1.0).predict(X).tolist() == [True, True]
