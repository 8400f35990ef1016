"""Deterministic curation pipeline for UHD text-to-video training corpora."""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "ClipRecord": "clip_logic", "ClipSet": "clip_logic", "classify": "clip_logic",
    "extract_shorts_from_long": "clip_logic", "subclip_sample": "clip_logic",
    "StructuredCaption": "captions", "prompt_stream": "captions", "sample_prompt": "captions",
    "Frame": "frame_io", "StreamMeta": "frame_io", "Y4MReader": "frame_io", "read_y4m": "frame_io",
    "MotionScorer": "purification", "PurificationGate": "purification", "ScoreSet": "purification",
    "gate_clip": "purification", "motion_score": "purification",
    "AdaptiveShotDetector": "scene_split", "detect_cuts": "scene_split",
    "FilterReport": "stat_filters", "StatisticalFilter": "stat_filters",
    "PurifyThresholds": "params", "SplitParams": "params", "StatThresholds": "params",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    # submodules load on first use so the CLI starts without numpy or scikit-learn
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
