"""Statistical frame-quality filters.

Four per-frame tests, each aggregated per clip against a bad-frame ratio:

* text area: union area of detected text boxes over the frame area
* black border: mean grey level of the border strips
* exposure: share of pixels that are near-black or near-white
* graying: mean per-pixel variance across the R, G, B channels

"Higher than" and "lower than" are strict everywhere, so a value sitting
exactly on a threshold passes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import _fused
from ._validation import as_rgb, check_frames
from .errors import EmptyClip, FrameTooSmall, InvalidBox
from .params import StatThresholds

FILTERS = ("text", "border", "exposure", "graying")


@dataclass(frozen=True)
class TextBox:
    """Half-open pixel rectangle ``[x0, x1) x [y0, y1)``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def validate(self, width: int, height: int) -> "TextBox":
        if not (0 <= self.x0 < self.x1 <= width and 0 <= self.y0 < self.y1 <= height):
            raise InvalidBox(f"{self} outside a {width}x{height} frame or empty")
        return self

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @classmethod
    def coerce(cls, box) -> "TextBox":
        if isinstance(box, TextBox):
            return box
        if isinstance(box, Mapping):
            return cls(int(box["x0"]), int(box["y0"]), int(box["x1"]), int(box["y1"]))
        x0, y0, x1, y1 = box
        return cls(int(x0), int(y0), int(x1), int(y1))

    def to_list(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1]


# -- geometry ---------------------------------------------------------------

def rect_union_area(boxes: Sequence[TextBox]) -> int:
    """Exact union area by coordinate compression along x.

    For each elementary x-slab the y-intervals of the boxes covering it are
    merged; slab width times merged length is summed.
    """
    if not boxes:
        return 0
    xs = sorted({b.x0 for b in boxes} | {b.x1 for b in boxes})
    by_start = sorted(boxes, key=lambda b: b.x0)
    area = 0
    for xa, xb in zip(xs, xs[1:]):
        spans = sorted((b.y0, b.y1) for b in by_start if b.x0 <= xa and b.x1 >= xb)
        covered = 0
        cur_lo = cur_hi = None
        for lo, hi in spans:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    covered += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            elif hi > cur_hi:
                cur_hi = hi
        if cur_hi is not None:
            covered += cur_hi - cur_lo
        area += covered * (xb - xa)
    return area


def text_union_ratio(width: int, height: int, boxes: Sequence) -> float:
    boxes = [TextBox.coerce(b).validate(width, height) for b in boxes]
    return rect_union_area(boxes) / (width * height)


# -- pixel statistics ---------------------------------------------------------

def luma601(rgb: np.ndarray) -> np.ndarray:
    """``round(0.299 R + 0.587 G + 0.114 B)`` in integer arithmetic."""
    rgb = as_rgb(rgb)
    acc = rgb[..., 0].astype(np.uint32) * 299
    acc += rgb[..., 1].astype(np.uint32) * 587
    acc += rgb[..., 2].astype(np.uint32) * 114
    acc += 500
    return (acc // 1000).astype(np.uint8)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def border_depths(width: int, height: int, depth_ratio: float) -> tuple[int, int]:
    dx = max(1, _round_half_up(depth_ratio * width))
    dy = max(1, _round_half_up(depth_ratio * height))
    if 2 * dx >= width or 2 * dy >= height:
        raise FrameTooSmall(f"{width}x{height} frame too small for {depth_ratio:.3%} borders")
    return dx, dy


def border_mean(frame, depth_ratio: float = 0.03, mode: str = "union", gray: np.ndarray | None = None) -> float:
    """Mean grey level over the four border strips.

    ``mode="union"`` averages over the union of the strips (corners counted
    once). ``mode="per_side"`` returns the darkest individual strip mean.
    """
    if gray is None:
        gray = luma601(frame)
    h, w = gray.shape
    dx, dy = border_depths(w, h, depth_ratio)
    if mode == "per_side":
        sides = (gray[:dy], gray[h - dy:], gray[:, :dx], gray[:, w - dx:])
        return min(float(s.sum(dtype=np.int64)) / s.size for s in sides)
    total = int(gray[:dy].sum(dtype=np.int64)) + int(gray[h - dy:].sum(dtype=np.int64))
    middle = gray[dy:h - dy]
    total += int(middle[:, :dx].sum(dtype=np.int64)) + int(middle[:, w - dx:].sum(dtype=np.int64))
    count = w * h - (w - 2 * dx) * (h - 2 * dy)
    return total / count


def exposure_bad_ratio(frame, low: int = 5, high: int = 250, gray: np.ndarray | None = None) -> float:
    if gray is None:
        gray = luma601(frame)
    bad = np.count_nonzero((gray > high) | (gray < low))
    return bad / gray.size


_PAIR_SQUARES = np.arange(-255, 256, dtype=np.int64) ** 2


def graying_score(frame, bessel: bool = False) -> float:
    """Mean over pixels of the variance of the (R, G, B) triple.

    Per pixel ``3*sum(x^2) - (sum x)^2`` equals the sum of squared pairwise
    channel differences; those are histogrammed so the total stays an exact
    integer until the final division by ``9 N`` (``6 N`` with ``bessel=True``).
    """
    rgb = as_rgb(frame)
    planes = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    numer = 0
    for a, b in ((0, 1), (0, 2), (1, 2)):
        d = np.subtract(planes[a], planes[b], dtype=np.int16)
        d += 255
        numer += int(np.bincount(d.ravel(), minlength=511) @ _PAIR_SQUARES)
    denom = (6 if bessel else 9) * rgb.shape[0] * rgb.shape[1]
    return numer / denom


def frame_statistics(frame, t: StatThresholds = StatThresholds()) -> tuple[float, float, float]:
    """``(border_mean, exposure_bad_ratio, graying_score)`` of one frame.

    Uses the single-pass compiled kernel when numba is available, otherwise
    the per-statistic numpy functions. Both give identical results.
    """
    rgb = as_rgb(frame)
    if not _fused.AVAILABLE:
        gray = luma601(rgb)
        return (border_mean(rgb, t.border_depth_ratio, t.border_mode, gray=gray),
                exposure_bad_ratio(rgb, t.exposure_low, t.exposure_high, gray=gray),
                graying_score(rgb, t.variance_bessel))
    h, w = rgb.shape[:2]
    dx, dy = border_depths(w, h, t.border_depth_ratio)
    grid, extreme, pair = _fused.frame_sums(rgb, dx, dy, t.exposure_low, t.exposure_high)
    if t.border_mode == "per_side":
        sides = ((grid[0].sum(), dy * w), (grid[2].sum(), dy * w), (grid[:, 0].sum(), dx * h),
                 (grid[:, 2].sum(), dx * h))
        border = min(float(s) / n for s, n in sides)
    else:
        border = int(grid.sum() - grid[1, 1]) / (w * h - (w - 2 * dx) * (h - 2 * dy))
    graying = int(pair) / ((6 if t.variance_bessel else 9) * w * h)
    return border, int(extreme) / (w * h), graying


# -- aggregation --------------------------------------------------------------

def aggregate_clip(flags: Sequence[bool], bad_frame_ratio: float = 0.05) -> tuple[float, bool]:
    """Return ``(ratio, passed)``; a clip fails only if ratio > bad_frame_ratio."""
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        raise EmptyClip("cannot aggregate an empty clip")
    flagged = int(np.count_nonzero(flags))
    passed = Fraction(flagged, flags.size) <= Fraction(repr(float(bad_frame_ratio)))
    return flagged / flags.size, passed


def propagate_sampled(n_frames: int, sampled: Mapping[int, bool], interval: int) -> list[bool]:
    """Spread flags from frames ``0, k, 2k, ...`` over their k-frame spans."""
    return [bool(sampled.get((i // interval) * interval, False)) for i in range(n_frames)]


def rle_encode(flags: Sequence[bool]) -> list[list[int]]:
    """Run-length encode a bitmap as ``[[value, run_length], ...]``."""
    runs: list[list[int]] = []
    for f in flags:
        v = int(bool(f))
        if runs and runs[-1][0] == v:
            runs[-1][1] += 1
        else:
            runs.append([v, 1])
    return runs


def rle_decode(runs: Sequence[Sequence[int]]) -> list[bool]:
    out: list[bool] = []
    for v, n in runs:
        out.extend([bool(v)] * n)
    return out


@dataclass
class FilterVerdict:
    flagged_frame_count: int
    frames_total: int
    ratio: float
    passed: bool
    flags: list[bool] = field(default_factory=list)

    @classmethod
    def from_flags(cls, flags: Sequence[bool], bad_frame_ratio: float) -> "FilterVerdict":
        ratio, passed = aggregate_clip(flags, bad_frame_ratio)
        flags = [bool(f) for f in flags]
        return cls(sum(flags), len(flags), ratio, passed, flags)

    def to_dict(self) -> dict:
        return {
            "flagged_frame_count": self.flagged_frame_count,
            "frames_total": self.frames_total,
            "ratio": self.ratio,
            "pass": self.passed,
            "flags_rle": rle_encode(self.flags),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FilterVerdict":
        return cls(d["flagged_frame_count"], d["frames_total"], d["ratio"], d["pass"], rle_decode(d["flags_rle"]))


@dataclass
class FilterReport:
    """Per-filter verdicts for one clip. A filter that was not run is ``None``."""

    text: FilterVerdict | None
    border: FilterVerdict
    exposure: FilterVerdict
    graying: FilterVerdict

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts().values())

    def verdicts(self) -> dict[str, FilterVerdict]:
        return {name: getattr(self, name) for name in FILTERS if getattr(self, name) is not None}

    def failed(self) -> list[str]:
        return [name for name, v in self.verdicts().items() if not v.passed]

    def to_dict(self) -> dict:
        return {name: (None if getattr(self, name) is None else getattr(self, name).to_dict()) for name in FILTERS}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FilterReport":
        return cls(**{name: (None if d.get(name) is None else FilterVerdict.from_dict(d[name])) for name in FILTERS})


# -- estimator front-end ---------------------------------------------------------

class StatisticalFilter(BaseEstimator):
    """Frame-quality filter bank with a scikit-learn style interface.

    ``transform`` returns one row per frame with the four raw statistics
    ``[text_ratio, border_mean, exposure_ratio, graying_score]``;
    ``predict`` returns the matching boolean flag matrix; ``report`` adds the
    per-clip aggregation. Text boxes come from an OCR provider and are
    passed in as ``boxes``: a mapping from frame position to box list for the
    sampled positions only (``0, k, 2k, ...``). Without boxes the text column
    is NaN / False and the text verdict is ``None``.

    The estimator is stateless; ``fit`` only validates its input.
    """

    def __init__(
        self,
        text_area_ratio=0.02,
        bad_frame_ratio=0.05,
        border_depth_ratio=0.03,
        border_mean_max=3.0,
        exposure_low=5,
        exposure_high=250,
        exposure_pixel_ratio=0.12,
        gray_variance_min=1.2,
        variance_bessel=False,
        border_mode="union",
        text_sample_interval=5,
    ):
        self.text_area_ratio = text_area_ratio
        self.bad_frame_ratio = bad_frame_ratio
        self.border_depth_ratio = border_depth_ratio
        self.border_mean_max = border_mean_max
        self.exposure_low = exposure_low
        self.exposure_high = exposure_high
        self.exposure_pixel_ratio = exposure_pixel_ratio
        self.gray_variance_min = gray_variance_min
        self.variance_bessel = variance_bessel
        self.border_mode = border_mode
        self.text_sample_interval = text_sample_interval

    @classmethod
    def from_thresholds(cls, thresholds: StatThresholds) -> "StatisticalFilter":
        return cls(**asdict(thresholds))

    @property
    def thresholds(self) -> StatThresholds:
        return StatThresholds(**self.get_params())

    def fit(self, X, y=None):
        self.thresholds  # validates parameters
        check_frames(X)
        return self

    def _text_ratios(self, frames, boxes) -> np.ndarray:
        n = len(frames)
        out = np.full(n, np.nan)
        if boxes is None:
            return out
        h, w = frames[0].shape[:2]
        k = self.text_sample_interval
        sampled = {pos: text_union_ratio(w, h, bs) for pos, bs in boxes.items()}
        for i in range(n):
            out[i] = sampled.get((i // k) * k, 0.0)
        return out

    def transform(self, X, boxes: Mapping[int, Sequence] | None = None) -> np.ndarray:
        frames = check_frames(X)
        t = self.thresholds
        stats = np.empty((len(frames), 4))
        stats[:, 0] = self._text_ratios(frames, boxes)
        for i, rgb in enumerate(frames):
            stats[i, 1:] = frame_statistics(rgb, t)
        return stats

    def flags_from_stats(self, stats: np.ndarray) -> np.ndarray:
        t = self.thresholds
        flags = np.zeros(stats.shape, dtype=bool)
        with np.errstate(invalid="ignore"):
            flags[:, 0] = stats[:, 0] > t.text_area_ratio
        flags[:, 1] = stats[:, 1] < t.border_mean_max
        flags[:, 2] = stats[:, 2] > t.exposure_pixel_ratio
        flags[:, 3] = stats[:, 3] < t.gray_variance_min
        return flags

    def predict(self, X, boxes: Mapping[int, Sequence] | None = None) -> np.ndarray:
        return self.flags_from_stats(self.transform(X, boxes))

    def report(self, X, boxes: Mapping[int, Sequence] | None = None) -> FilterReport:
        flags = self.predict(X, boxes)
        r = self.bad_frame_ratio
        return FilterReport(
            text=None if boxes is None else FilterVerdict.from_flags(flags[:, 0], r),
            border=FilterVerdict.from_flags(flags[:, 1], r),
            exposure=FilterVerdict.from_flags(flags[:, 2], r),
            graying=FilterVerdict.from_flags(flags[:, 3], r),
        )
