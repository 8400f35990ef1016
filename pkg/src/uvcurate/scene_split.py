"""Shot boundary detection.

Pass one scores every adjacent frame pair by mean HSV difference. Pass two
divides each score by the mean of its neighbours (centre excluded) and cuts
where that ratio and the raw score both clear their thresholds, subject to a
minimum shot length. A separate check compares embeddings of a clip's first
and last five frames to catch dissolves the difference detector misses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_rgb, check_frames
from .errors import DimensionMismatch, ShortClip
from .params import SplitParams

HUE_STEPS = 256
EDGE_FRAMES = 5


@dataclass(frozen=True)
class CutList:
    cuts: tuple[int, ...]
    n_frames: int

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cuts)
        object.__setattr__(self, "cuts", cuts)
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError("cuts must be strictly ascending")
        if cuts and not (0 < cuts[0] and cuts[-1] < self.n_frames):
            raise ValueError("cuts must lie strictly inside (0, n_frames)")

    def segments(self) -> list[tuple[int, int]]:
        bounds = [0, *self.cuts, self.n_frames]
        return list(zip(bounds, bounds[1:]))

    def to_dict(self) -> dict:
        return {"cuts": list(self.cuts), "n_frames": self.n_frames}

    @classmethod
    def from_dict(cls, d) -> "CutList":
        return cls(tuple(d["cuts"]), d["n_frames"])


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Float HSV with hue on a 256-step circle, S and V on 0..255."""
    rgb = as_rgb(rgb).astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=2)
    minc = rgb.min(axis=2)
    delta = maxc - minc
    v = maxc
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(maxc > 0, delta / maxc * 255.0, 0.0)
        rc = (maxc - r) / delta
        gc = (maxc - g) / delta
        bc = (maxc - b) / delta
    h = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0) * HUE_STEPS
    return np.stack([h, s, v], axis=2)


def content_score_hsv(prev_hsv: np.ndarray, cur_hsv: np.ndarray) -> float:
    if prev_hsv.shape != cur_hsv.shape:
        raise DimensionMismatch(f"{prev_hsv.shape[:2]} vs {cur_hsv.shape[:2]}")
    dh = np.abs(cur_hsv[..., 0] - prev_hsv[..., 0])
    dh = np.minimum(dh, HUE_STEPS - dh)
    ds = np.abs(cur_hsv[..., 1] - prev_hsv[..., 1])
    dv = np.abs(cur_hsv[..., 2] - prev_hsv[..., 2])
    n = dh.size
    return float((dh.sum() / n + ds.sum() / n + dv.sum() / n) / 3.0)


def content_score(prev, cur) -> float:
    """Mean over pixels of ``(|dH| + |dS| + |dV|) / 3`` with wrapped hue."""
    a, b = as_rgb(prev), as_rgb(cur)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape[:2]} vs {b.shape[:2]}")
    return content_score_hsv(rgb_to_hsv(a), rgb_to_hsv(b))


def frame_scores(frames: Sequence) -> np.ndarray:
    """``scores[i] = content_score(frames[i-1], frames[i])``, ``scores[0] = 0``."""
    scores = np.zeros(len(frames))
    prev = None
    for i, f in enumerate(frames):
        hsv = rgb_to_hsv(f)
        if prev is not None:
            scores[i] = content_score_hsv(prev, hsv)
        prev = hsv
    return scores


def adaptive_ratios(scores: Sequence[float], window_radius: int) -> np.ndarray:
    """Score over the mean of its neighbours within ``window_radius``.

    The centre sample is excluded; near the ends only the neighbours that
    exist are averaged. The mean is floored at 1e-9.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    ratios = np.zeros(n)
    for i in range(n):
        lo, hi = max(0, i - window_radius), min(n, i + window_radius + 1)
        count = hi - lo - 1
        if count <= 0:
            continue
        mean = (scores[lo:hi].sum() - scores[i]) / count
        ratios[i] = scores[i] / max(mean, 1e-9)
    return ratios


def detect_cuts(scores: Sequence[float], params: SplitParams = SplitParams()) -> CutList:
    """Cut at frame i when the adaptive ratio, the raw score, and the
    distance from the previous cut (or stream start) all clear their
    thresholds. A cut that would leave a tail shorter than
    ``min_scene_len`` is dropped.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    ratios = adaptive_ratios(scores, params.window_radius)
    cuts = []
    last = 0
    for i in range(1, n):
        if i - last < params.min_scene_len or n - i < params.min_scene_len:
            continue
        if ratios[i] >= params.adaptive_threshold and scores[i] >= params.min_content_score:
            cuts.append(i)
            last = i
    return CutList(tuple(cuts), n)


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def edge_similarity(first: Sequence[np.ndarray], last: Sequence[np.ndarray]) -> float:
    """Mean pairwise cosine similarity between two embedding groups."""
    a = np.stack([_unit(v) for v in first])
    b = np.stack([_unit(v) for v in last])
    return float(np.clip((a @ b.T).mean(), -1.0, 1.0))


def dissolve_flag(clip_frames: Sequence, embedder: Callable[[list], list],
                  params: SplitParams = SplitParams()) -> dict:
    """Compare embeddings of the first and last five frames of a clip.

    ``embedder`` maps a list of frames to a list of embedding vectors (any
    :class:`~uvcurate.providers.EmbeddingProvider` adapter fits). Returns
    ``{"similarity": float, "flagged": bool}``.
    """
    if len(clip_frames) < 2 * EDGE_FRAMES:
        raise ShortClip(f"dissolve check needs >= {2 * EDGE_FRAMES} frames, got {len(clip_frames)}")
    edge = list(clip_frames[:EDGE_FRAMES]) + list(clip_frames[-EDGE_FRAMES:])
    emb = embedder(edge)
    if len(emb) != len(edge):
        raise ValueError(f"embedder returned {len(emb)} vectors for {len(edge)} frames")
    sim = edge_similarity(emb[:EDGE_FRAMES], emb[EDGE_FRAMES:])
    return {"similarity": sim, "flagged": sim < params.dissolve_sim_threshold}


class AdaptiveShotDetector(BaseEstimator):
    """Two-pass adaptive shot detector.

    ``fit(frames)`` computes ``scores_`` and ``cut_list_``; ``predict``
    labels every frame with its shot number, so ``fit_predict`` behaves like
    a temporal clusterer.

    Examples
    --------
    >>> det = AdaptiveShotDetector(min_scene_len=15)      # doctest: +SKIP
    >>> det.fit(frames).cut_list_.cuts                    # doctest: +SKIP
    (30,)
    """

    def __init__(self, adaptive_threshold=3.0, min_content_score=15.0, window_radius=2,
                 min_scene_len=15, dissolve_sim_threshold=0.5):
        self.adaptive_threshold = adaptive_threshold
        self.min_content_score = min_content_score
        self.window_radius = window_radius
        self.min_scene_len = min_scene_len
        self.dissolve_sim_threshold = dissolve_sim_threshold

    @property
    def params(self) -> SplitParams:
        return SplitParams(**self.get_params())

    def fit(self, X, y=None):
        frames = check_frames(X)
        return self.fit_scores(frame_scores(frames))

    def fit_scores(self, scores):
        """Fit from precomputed pass-one scores."""
        self.scores_ = np.asarray(scores, dtype=np.float64)
        self.ratios_ = adaptive_ratios(self.scores_, self.window_radius)
        self.cut_list_ = detect_cuts(self.scores_, self.params)
        return self

    def predict(self, X=None) -> np.ndarray:
        labels = np.zeros(self.cut_list_.n_frames, dtype=np.int64)
        for cut in self.cut_list_.cuts:
            labels[cut:] += 1
        return labels

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).predict()
