import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uvcurate.errors import ContradictorySpec, IdMismatch
from uvcurate.frame_io import Y4MReader
from uvcurate.stat_filters import StatisticalFilter, StatThresholds, graying_score, luma601
from uvcurate.synth import (
    BASE, GRAY_RANGE, TEXT, VAR_RANGE, ClipSpec, DefectKind, DefectSpec, GroundTruth, category_map,
    cut_corpus, evaluate, filter_corpus, generate, load_truth, match_cuts, render_frames, truth_textbox_lookup,
    write_corpus,
)

K = DefectKind


def decode(data):
    return list(Y4MReader.from_bytes(data))


def test_overexposure_example():
    spec = ClipSpec("ov", n_frames=100, defects=(DefectSpec(K.OVEREXPOSURE, (0, 10), 1.0),))
    data, truth = generate(spec, 0)
    assert sum(truth.frame_flags["exposure"]) == 10
    assert truth.clip_fail["exposure"] is True
    frames = decode(data)
    assert all(np.all(f.rgb == 255) for f in frames[:10])
    report = StatisticalFilter().report(frames)
    assert report.exposure.flagged_frame_count == 10 and report.exposure.ratio == 0.10
    assert not report.exposure.passed


def test_hard_cut_truth():
    spec = ClipSpec("cut", n_frames=60, defects=(DefectSpec(K.HARD_CUT, (30, 31)),))
    assert generate(spec, 0)[1].cuts == [30]


def test_determinism():
    spec = filter_corpus(12, 0)[5][0]
    assert generate(spec, 3) == generate(spec, 3)
    assert generate(spec, 3)[0] != generate(spec, 4)[0]


@pytest.mark.parametrize("defects", [
    (DefectSpec(K.OVEREXPOSURE, (0, 10)), DefectSpec(K.GRAY_FRAMES, (5, 15))),
    (DefectSpec(K.BLACK_BORDER, (0, 50), 0.03),),
    (DefectSpec(K.HARD_CUT, (0, 1)),),
])
def test_contradictory_specs(defects):
    with pytest.raises(ContradictorySpec):
        ClipSpec("bad", n_frames=40, defects=defects)


def test_threshold_straddle_is_contradictory():
    # one textured column beside a desaturated frame leaves the variance undecided
    spec = ClipSpec("mix", defects=(DefectSpec(K.GRAY_FRAMES, (0, 5), geometry=((0, 0, 127, 72),)),))
    with pytest.raises(ContradictorySpec):
        generate(spec, 0)


def test_severity_bounds():
    with pytest.raises(ContradictorySpec):
        DefectSpec(K.OVEREXPOSURE, (0, 1), 1.5)
    with pytest.raises(ContradictorySpec):
        DefectSpec(K.BLACK_BORDER, (0, 1), 0.6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([(0, 1), (1, 1), (0, 0), (2, 0)]))
def test_rendered_pixels_stay_in_category_ranges(seed, velocity):
    spec = ClipSpec("p", n_frames=6, velocity=velocity, defects=(DefectSpec(K.TEXT_OVERLAY, (2, 4), 0.1),))
    frames = decode(generate(spec, seed)[0])
    for i, f in enumerate(frames):
        labels = category_map(spec, i)
        gray = luma601(f.rgb).astype(float)
        var = np.var(f.rgb.astype(float), axis=2)
        for cat in (BASE, TEXT):
            sel = labels == cat
            if sel.any():
                assert GRAY_RANGE[cat][0] <= gray[sel].min() and gray[sel].max() <= GRAY_RANGE[cat][1]
                assert VAR_RANGE[cat][0] <= var[sel].min() and var[sel].max() <= VAR_RANGE[cat][1]


def test_gray_frames_are_desaturated():
    spec = ClipSpec("g", n_frames=4, defects=(DefectSpec(K.GRAY_FRAMES, (1, 3), 1.0),))
    frames = decode(generate(spec, 0)[0])
    assert graying_score(frames[1].rgb) == 0.0
    assert graying_score(frames[0].rgb) > 150


def test_static_and_jitter_offsets():
    spec = ClipSpec("s", n_frames=5, velocity=(0, 0))
    frames = render_frames(spec, 1)
    assert all(np.array_equal(frames[0], f) for f in frames)
    assert generate(spec, 1)[1].motion_static
    jitter = ClipSpec("j", n_frames=5, velocity=(0, 0), defects=(DefectSpec(K.FAST_JITTER, (1, 5), 3),))
    assert not generate(jitter, 1)[1].motion_static


def test_evaluate_perfect_and_one_false_positive():
    truths = {f"c{i}": GroundTruth(f"c{i}", 10, {}, {"text": i < 10, "border": False, "exposure": False,
                                                     "graying": False}, []) for i in range(20)}
    perfect = {cid: dict(t.clip_fail) for cid, t in truths.items()}
    assert all(v["precision"] == v["recall"] == 1.0 for v in evaluate(perfect, truths).values())
    noisy = {cid: dict(v) for cid, v in perfect.items()}
    noisy["c15"]["text"] = True
    assert evaluate(noisy, truths)["text"]["precision"] == 10 / 11


def test_evaluate_cut_tolerance_and_ids():
    truths = {"a": GroundTruth("a", 60, {}, {}, [30])}
    assert evaluate({"a": {"cuts": [31]}}, truths)["cuts"]["recall"] == 1.0
    assert evaluate({"a": {"cuts": [32]}}, truths)["cuts"]["recall"] == 0.0
    with pytest.raises(IdMismatch):
        evaluate({"b": {"cuts": []}}, truths)
    assert match_cuts([10, 11], [10]) == (1, 1, 0)


def test_corpora_shapes():
    specs = filter_corpus(24, 0)
    intents = [i for _, i in specs]
    assert intents.count("clean") == 14 and len(specs) == 24
    cuts = cut_corpus(10, 0)
    assert all(s.fps == (30, 1) for s in cuts)


def test_write_corpus_and_truth_lookup(tmp_path):
    specs = [s for s, _ in filter_corpus(12, 0)]
    write_corpus(tmp_path, specs, 0)
    assert len(list((tmp_path / "corpus").glob("*.y4m"))) == 12
    recs = load_truth(tmp_path / "truth.jsonl")
    assert set(recs) == {f"{i:03d}" for i in range(12)}
    rec = recs["001"]
    assert ClipSpec.from_dict(rec["spec"]) == specs[1]
    assert GroundTruth.from_dict(rec["truth"]).to_dict() == rec["truth"]
    lookup = truth_textbox_lookup(tmp_path / "truth.jsonl")
    text_frames = [int(k) for k in rec["truth"]["text_boxes"]]
    assert lookup("001", text_frames[0]) and lookup("001", 10**6) == []
    json.loads((tmp_path / "truth.jsonl").read_text().splitlines()[0])
