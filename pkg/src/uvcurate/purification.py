"""Model-based purification gates.

A clip survives when its quality score, motion score and caption
similarity fall inside their bands and the attribute judge reports none of
the 16 low-quality attributes. Quality, similarity and attributes come from
providers; motion is scored natively by exhaustive block matching unless a
``flow`` provider is configured.

The native motion score is the mean block displacement in pixels of the
downscaled frames. It is a proxy for a learned optical-flow magnitude, so
the default 0.1-100 band should be recalibrated for real footage.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array

from ._validation import check_frames
from .errors import FrameTooSmall, IncompleteScores, TooFewFrames
from .params import PurifyThresholds
from .providers import ATTRIBUTES, ProviderSet
from .stat_filters import luma601

BLOCK = 16
SEARCH = 8


@dataclass
class ScoreSet:
    vtss: float | None = None
    motion: float | None = None
    caption_sim: float | None = None
    attributes: dict[str, bool] = field(default_factory=dict)

    def check_complete(self):
        missing = [n for n in ("vtss", "motion", "caption_sim") if getattr(self, n) is None]
        missing += [f"attribute:{a}" for a in ATTRIBUTES if a not in self.attributes]
        extra = [a for a in self.attributes if a not in ATTRIBUTES]
        if missing or extra:
            raise IncompleteScores(f"missing={missing} unknown={extra}")

    def to_vector(self) -> np.ndarray:
        self.check_complete()
        return np.array([self.vtss, self.motion, self.caption_sim,
                         *(float(self.attributes[a]) for a in ATTRIBUTES)])

    @classmethod
    def from_vector(cls, v) -> "ScoreSet":
        v = np.asarray(v, dtype=np.float64)
        return cls(float(v[0]), float(v[1]), float(v[2]),
                   {a: bool(x) for a, x in zip(ATTRIBUTES, v[3:])})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScoreSet":
        return cls(d.get("vtss"), d.get("motion"), d.get("caption_sim"), dict(d.get("attributes") or {}))


# -- native motion ----------------------------------------------------------------

def downscale_nearest(img: np.ndarray, max_long_edge: int) -> np.ndarray:
    """Nearest-neighbour resize so the long edge is at most ``max_long_edge``."""
    h, w = img.shape[:2]
    long_edge = max(h, w)
    if long_edge <= max_long_edge:
        return img
    nh = max(1, h * max_long_edge // long_edge)
    nw = max(1, w * max_long_edge // long_edge)
    rows = (2 * np.arange(nh) + 1) * h // (2 * nh)
    cols = (2 * np.arange(nw) + 1) * w // (2 * nw)
    return img[rows][:, cols]


def _search_offsets(radius: int) -> list[tuple[int, int]]:
    offs = [(dy, dx) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)]
    # priority order doubles as the tie-break: smallest magnitude, then row-major
    return sorted(offs, key=lambda o: (o[0] * o[0] + o[1] * o[1], o[0], o[1]))


def block_motion_field(prev: np.ndarray, cur: np.ndarray, block: int = BLOCK, radius: int = SEARCH) -> np.ndarray:
    """Per-block displacement ``(dy, dx)`` of ``cur`` relative to ``prev``.

    Each full ``block x block`` tile of ``cur`` is compared by sum of absolute
    differences against every tile of ``prev`` displaced by up to ``radius``
    pixels that lies fully inside the frame. Returns an int array of shape
    ``(rows, cols, 2)``; the vector points from the matched position in
    ``prev`` to the block's position in ``cur``.
    """
    prev = np.asarray(prev)
    cur = np.asarray(cur)
    if prev.shape != cur.shape or prev.ndim != 2:
        raise ValueError("expected two equally sized 2-D luma planes")
    h, w = cur.shape
    nby, nbx = h // block, w // block
    if nby == 0 or nbx == 0:
        raise FrameTooSmall(f"{w}x{h} frame holds no {block}x{block} block")
    hc, wc = nby * block, nbx * block
    cur_c = cur[:hc, :wc].astype(np.int32)
    padded = np.pad(prev.astype(np.int32), radius, mode="constant")
    by = np.arange(nby)[:, None] * block
    bx = np.arange(nbx)[None, :] * block
    best = np.full((nby, nbx), np.iinfo(np.int64).max, dtype=np.int64)
    best_off = np.zeros((nby, nbx, 2), dtype=np.int64)
    for dy, dx in _search_offsets(radius):
        valid = (by + dy >= 0) & (by + dy + block <= h) & (bx + dx >= 0) & (bx + dx + block <= w)
        if not valid.any():
            continue
        shifted = padded[radius + dy:radius + dy + hc, radius + dx:radius + dx + wc]
        sad = np.abs(cur_c - shifted).reshape(nby, block, nbx, block).sum(axis=(1, 3), dtype=np.int64)
        better = valid & (sad < best)
        best[better] = sad[better]
        best_off[better] = (dy, dx)
    return -best_off


def pair_motion(prev: np.ndarray, cur: np.ndarray, block: int = BLOCK, radius: int = SEARCH) -> float:
    field_ = block_motion_field(prev, cur, block, radius)
    return float(np.sqrt((field_.astype(np.float64) ** 2).sum(axis=2)).mean())


def motion_pairs(n_frames: int, interval: int) -> list[tuple[int, int]]:
    """Frame pairs ``(i, i + s)`` for ``i = 0, s, 2s, ...`` with ``s = min(interval, n - 1)``."""
    if n_frames < 2:
        raise TooFewFrames(f"motion scoring needs >= 2 frames, got {n_frames}")
    step = min(interval, n_frames - 1)
    return [(i, i + step) for i in range(0, n_frames - step, step)]


def motion_score(frames, params: PurifyThresholds = PurifyThresholds()) -> float:
    """Mean block displacement over sampled frame pairs of a clip."""
    if len(frames) < 2:
        raise TooFewFrames(f"motion scoring needs >= 2 frames, got {len(frames)}")
    rgb = check_frames(frames, min_frames=2)
    pairs = motion_pairs(len(rgb), params.flow_sample_interval)
    cache: dict[int, np.ndarray] = {}

    def plane(i):
        if i not in cache:
            cache[i] = downscale_nearest(luma601(rgb[i]), params.flow_downscale)
        return cache[i]

    return float(np.mean([pair_motion(plane(a), plane(b)) for a, b in pairs]))


# -- gating -------------------------------------------------------------------------

def gate_clip(scores: ScoreSet, thresholds: PurifyThresholds = PurifyThresholds()) -> tuple[bool, list[str]]:
    """Return ``(passed, reasons)``; ``reasons`` names every violated gate."""
    scores.check_complete()
    reasons = []
    if not scores.vtss >= thresholds.vtss_min:
        reasons.append("vtss")
    if not thresholds.motion_min <= scores.motion <= thresholds.motion_max:
        reasons.append("motion")
    if not scores.caption_sim >= thresholds.caption_sim_min:
        reasons.append("caption_sim")
    reasons += [f"attribute:{a}" for a in ATTRIBUTES if scores.attributes[a]]
    return not reasons, reasons


def sample_positions(n_frames: int, count: int) -> list[int]:
    """``count`` positions spread evenly over ``[0, n_frames)``, ends included."""
    if n_frames <= count:
        return list(range(n_frames))
    if count == 1:
        return [n_frames // 2]
    return [i * (n_frames - 1) // (count - 1) for i in range(count)]


def fetch_scores(clip_id: str, frames: Sequence, providers: ProviderSet,
                 thresholds: PurifyThresholds = PurifyThresholds(), caption_text: str = "",
                 n_sample_frames: int = 8, source_id: str | None = None) -> ScoreSet:
    """Assemble a complete ScoreSet for one clip.

    Raises :class:`~uvcurate.errors.ProviderUnavailable` or
    :class:`~uvcurate.errors.ProviderMalformedResponse` when any provider
    fails; the caller decides whether that defers the clip.
    """
    sampled = [frames[i] for i in sample_positions(len(frames), n_sample_frames)]
    payload = {"source_id": source_id or clip_id}
    vtss = providers.request("vtss", clip_id, sampled, payload)
    sim = providers.request("similarity", clip_id, sampled, {**payload, "text": caption_text})
    attrs = providers.request("attributes", clip_id, sampled, payload)
    if "flow" in providers:
        motion = providers.request("flow", clip_id, list(frames), payload)
    else:
        motion = motion_score(frames, thresholds)
    return ScoreSet(vtss, motion, sim, attrs)


# -- estimator front-ends -----------------------------------------------------

class MotionScorer(BaseEstimator, TransformerMixin):
    """Native block-matching motion scorer.

    ``transform`` maps a list of clips (each a frame sequence) to a column of
    motion scores.
    """

    def __init__(self, flow_sample_interval=8, flow_downscale=512):
        self.flow_sample_interval = flow_sample_interval
        self.flow_downscale = flow_downscale

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        params = PurifyThresholds(flow_sample_interval=self.flow_sample_interval,
                                  flow_downscale=self.flow_downscale)
        return np.array([[motion_score(clip, params)] for clip in X])


class PurificationGate(BaseEstimator, ClassifierMixin):
    """Threshold gate over ScoreSets.

    ``X`` is either a list of :class:`ScoreSet` or a ``(n, 19)`` matrix laid
    out as ``[vtss, motion, caption_sim, *attributes]`` in registry order.
    ``predict`` returns True for clips that pass every gate.
    """

    def __init__(self, vtss_min=0.01, motion_min=0.1, motion_max=100.0, caption_sim_min=0.2):
        self.vtss_min = vtss_min
        self.motion_min = motion_min
        self.motion_max = motion_max
        self.caption_sim_min = caption_sim_min

    @property
    def thresholds(self) -> PurifyThresholds:
        return PurifyThresholds(**self.get_params())

    def _as_scoresets(self, X) -> list[ScoreSet]:
        if isinstance(X, np.ndarray) or (len(X) and not isinstance(X[0], ScoreSet)):
            arr = check_array(X, dtype=np.float64)
            if arr.shape[1] != 3 + len(ATTRIBUTES):
                raise IncompleteScores(f"expected {3 + len(ATTRIBUTES)} columns, got {arr.shape[1]}")
            return [ScoreSet.from_vector(row) for row in arr]
        return list(X)

    def fit(self, X, y=None):
        self.thresholds
        self.classes_ = np.array([False, True])
        return self

    def predict(self, X) -> np.ndarray:
        t = self.thresholds
        return np.array([gate_clip(s, t)[0] for s in self._as_scoresets(X)], dtype=bool)

    def reasons(self, X) -> list[list[str]]:
        t = self.thresholds
        return [gate_clip(s, t)[1] for s in self._as_scoresets(X)]
