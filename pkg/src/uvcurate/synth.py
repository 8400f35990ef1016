"""Synthetic Y4M clips with injected defects and analytic ground truth.

Base content is a smooth two-channel noise texture, rendered through a
palette whose blue channel always exceeds red by 40 levels. That keeps
every base pixel comfortably saturated (per-pixel channel variance well
above the graying threshold) and its grey level inside [70, 180], far from
the exposure and border thresholds. Defects then paint pixels of a few
known categories: pure black, pure white, equal-channel grey, or a red
text colour.

Ground truth never looks at rendered pixels. It rasterises the category
layout of each frame and bounds every filter statistic with per-category
intervals; a frame whose interval straddles a threshold is rejected as a
contradictory spec.

Severity units per defect kind:

=============  ===============================================================
TextOverlay    fraction of the frame covered by the overlay rectangle
BlackBorder    border depth as a fraction of width and height
Overexposure   fraction of pixels forced to white (1.0 = whole frame)
Underexposure  fraction of pixels forced to black
GrayFrames     fraction of the frame desaturated (centred rectangle)
StaticMotion   ignored; the texture stops moving over the range
FastJitter     horizontal jitter amplitude in pixels (alternating sign)
HardCut        ignored; a new shot starts at ``frame_range[0]``
Dissolve       ignored; the next shot fades in over ``frame_range``
=============  ===============================================================
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContradictorySpec, IdMismatch
from .frame_io import Chroma, StreamMeta, encode_y4m
from .rng import PortableRNG
from .stat_filters import FILTERS, StatThresholds, TextBox


class DefectKind(str, enum.Enum):
    TEXT_OVERLAY = "TextOverlay"
    BLACK_BORDER = "BlackBorder"
    OVEREXPOSURE = "Overexposure"
    UNDEREXPOSURE = "Underexposure"
    GRAY_FRAMES = "GrayFrames"
    STATIC_MOTION = "StaticMotion"
    FAST_JITTER = "FastJitter"
    HARD_CUT = "HardCut"
    DISSOLVE = "Dissolve"


PIXEL_DEFECTS = {
    DefectKind.TEXT_OVERLAY,
    DefectKind.BLACK_BORDER,
    DefectKind.OVEREXPOSURE,
    DefectKind.UNDEREXPOSURE,
    DefectKind.GRAY_FRAMES,
}

# pixel categories and their guaranteed post-decode statistics
BASE, BLACK, WHITE, GRAYED, TEXT = range(5)
TEXT_RGB = (230, 40, 40)
GRAY_RANGE = {BASE: (70.0, 180.0), BLACK: (0.0, 0.0), WHITE: (255.0, 255.0),
              GRAYED: (70.0, 180.0), TEXT: (85.0, 110.0)}
VAR_RANGE = {BASE: (150.0, 15000.0), BLACK: (0.0, 0.0), WHITE: (0.0, 0.0),
             GRAYED: (0.0, 0.0), TEXT: (6500.0, 8500.0)}
EXTREME = {BASE: False, BLACK: True, WHITE: True, GRAYED: False, TEXT: False}

# (R base, R span, G base, G span); blue is always R + 40
PALETTES = ((60, 100, 90, 60), (40, 60, 150, 60))
TEXTURE_CELL = 16


@dataclass(frozen=True)
class DefectSpec:
    kind: DefectKind
    frame_range: tuple[int, int]
    severity: float = 1.0
    geometry: tuple[TextBox, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DefectKind(self.kind))
        a, b = self.frame_range
        object.__setattr__(self, "frame_range", (int(a), int(b)))
        if b <= a:
            raise ContradictorySpec(f"{self.kind.value}: empty frame range {self.frame_range}")
        if self.geometry is not None:
            object.__setattr__(self, "geometry", tuple(TextBox.coerce(g) for g in self.geometry))
        if self.kind in PIXEL_DEFECTS and self.kind is not DefectKind.BLACK_BORDER and self.geometry is None:
            if not 0 < self.severity <= 1:
                raise ContradictorySpec(f"{self.kind.value}: severity must lie in (0, 1]")
        if self.kind is DefectKind.BLACK_BORDER and not 0 < self.severity < 0.5:
            raise ContradictorySpec("BlackBorder: depth ratio must lie in (0, 0.5)")
        if self.kind is DefectKind.FAST_JITTER and self.severity < 0:
            raise ContradictorySpec("FastJitter: amplitude must be non-negative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "frame_range": list(self.frame_range),
            "severity": self.severity,
            "geometry": None if self.geometry is None else [g.to_list() for g in self.geometry],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DefectSpec":
        return cls(d["kind"], tuple(d["frame_range"]), d.get("severity", 1.0),
                   None if d.get("geometry") is None else tuple(d["geometry"]))


@dataclass(frozen=True)
class ClipSpec:
    clip_id: str
    n_frames: int = 40
    width: int = 128
    height: int = 72
    fps: tuple[int, int] = (10, 1)
    velocity: tuple[int, int] = (0, 1)
    defects: tuple[DefectSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "defects", tuple(self.defects))
        if self.n_frames < 1 or self.width < 16 or self.height < 16:
            raise ContradictorySpec("clip needs >= 1 frame and at least 16x16 pixels")
        for d in self.defects:
            if not (0 <= d.frame_range[0] and d.frame_range[1] <= self.n_frames):
                raise ContradictorySpec(f"{d.kind.value} range {d.frame_range} outside {self.n_frames} frames")
        pixel = sorted((d for d in self.defects if d.kind in PIXEL_DEFECTS), key=lambda d: d.frame_range)
        for a, b in zip(pixel, pixel[1:]):
            if b.frame_range[0] < a.frame_range[1]:
                raise ContradictorySpec(f"{a.kind.value} and {b.kind.value} overlap on the same frames")
        transitions = sorted((d for d in self.defects if d.kind in (DefectKind.HARD_CUT, DefectKind.DISSOLVE)),
                             key=lambda d: d.frame_range)
        for a, b in zip(transitions, transitions[1:]):
            if b.frame_range[0] < a.frame_range[1]:
                raise ContradictorySpec("shot transitions overlap")
        for d in transitions:
            if d.frame_range[0] == 0:
                raise ContradictorySpec("a transition cannot start at frame 0")

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "n_frames": self.n_frames,
            "width": self.width,
            "height": self.height,
            "fps": list(self.fps),
            "velocity": list(self.velocity),
            "defects": [d.to_dict() for d in self.defects],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClipSpec":
        return cls(d["clip_id"], d["n_frames"], d["width"], d["height"], tuple(d["fps"]),
                   tuple(d["velocity"]), tuple(DefectSpec.from_dict(x) for x in d["defects"]))


@dataclass
class GroundTruth:
    clip_id: str
    n_frames: int
    frame_flags: dict[str, list[bool]]
    clip_fail: dict[str, bool]
    cuts: list[int]
    dissolves: list[list[int]] = field(default_factory=list)
    motion_static: bool = False
    text_boxes: dict[int, list[list[int]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "n_frames": self.n_frames,
            "frame_flags": {k: [int(x) for x in v] for k, v in self.frame_flags.items()},
            "clip_fail": {k: bool(v) for k, v in self.clip_fail.items()},
            "cuts": list(self.cuts),
            "dissolves": [list(d) for d in self.dissolves],
            "motion_static": bool(self.motion_static),
            "text_boxes": {str(k): v for k, v in sorted(self.text_boxes.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GroundTruth":
        return cls(
            d["clip_id"], d["n_frames"],
            {k: [bool(x) for x in v] for k, v in d["frame_flags"].items()},
            dict(d["clip_fail"]), list(d["cuts"]), [list(x) for x in d.get("dissolves", [])],
            bool(d.get("motion_static", False)),
            {int(k): v for k, v in d.get("text_boxes", {}).items()},
        )


# -- geometry --------------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def centered_rect(width: int, height: int, fraction: float) -> TextBox:
    """Centred rectangle with the frame's aspect covering ~``fraction`` of it."""
    if fraction >= 1:
        return TextBox(0, 0, width, height)
    s = math.sqrt(fraction)
    w = min(width, max(1, _round_half_up(width * s)))
    h = min(height, max(1, _round_half_up(height * s)))
    x0 = (width - w) // 2
    y0 = (height - h) // 2
    return TextBox(x0, y0, x0 + w, y0 + h)


def border_depth_px(width: int, height: int, ratio: float) -> tuple[int, int]:
    return max(1, _round_half_up(ratio * width)), max(1, _round_half_up(ratio * height))


def _defect_geometry(d: DefectSpec, width: int, height: int) -> list[TextBox]:
    if d.geometry is not None:
        return [g.validate(width, height) for g in d.geometry]
    return [centered_rect(width, height, d.severity)]


def category_map(spec: ClipSpec, frame: int) -> np.ndarray:
    """Per-pixel category labels for one frame of ``spec``."""
    labels = np.full((spec.height, spec.width), BASE, dtype=np.uint8)
    for d in spec.defects:
        if d.kind not in PIXEL_DEFECTS or not d.frame_range[0] <= frame < d.frame_range[1]:
            continue
        if d.kind is DefectKind.BLACK_BORDER:
            dx, dy = border_depth_px(spec.width, spec.height, d.severity)
            labels[:dy] = BLACK
            labels[spec.height - dy:] = BLACK
            labels[:, :dx] = BLACK
            labels[:, spec.width - dx:] = BLACK
            continue
        cat = {DefectKind.TEXT_OVERLAY: TEXT, DefectKind.OVEREXPOSURE: WHITE,
               DefectKind.UNDEREXPOSURE: BLACK, DefectKind.GRAY_FRAMES: GRAYED}[d.kind]
        for box in _defect_geometry(d, spec.width, spec.height):
            labels[box.y0:box.y1, box.x0:box.x1] = cat
    return labels


# -- rendering ---------------------------------------------------------------------

def _noise_field(rng: PortableRNG, height: int, width: int) -> np.ndarray:
    gh = height // TEXTURE_CELL + 2
    gw = width // TEXTURE_CELL + 2
    grid = np.array([[rng.random() for _ in range(gw)] for _ in range(gh)])
    ys = np.arange(height) / TEXTURE_CELL
    xs = np.arange(width) / TEXTURE_CELL
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g00 = grid[y0][:, x0]
    g01 = grid[y0][:, x0 + 1]
    g10 = grid[y0 + 1][:, x0]
    g11 = grid[y0 + 1][:, x0 + 1]
    return (g00 * (1 - fy) * (1 - fx) + g01 * (1 - fy) * fx + g10 * fy * (1 - fx) + g11 * fy * fx)


class _Shot:
    def __init__(self, seed: int, key: str, palette: int, canvas_h: int, canvas_w: int):
        rng = PortableRNG(seed, key)
        t1 = _noise_field(rng, canvas_h, canvas_w)
        t2 = _noise_field(rng, canvas_h, canvas_w)
        r0, rs, g0, gs = PALETTES[palette % len(PALETTES)]
        r = np.floor(r0 + rs * t1 + 0.5)
        g = np.floor(g0 + gs * t2 + 0.5)
        self.canvas = np.stack([r, g, r + 40], axis=2)

    def crop(self, oy: int, ox: int, h: int, w: int) -> np.ndarray:
        return self.canvas[oy:oy + h, ox:ox + w]


def _offsets(spec: ClipSpec) -> list[tuple[int, int]]:
    """Texture crop offset per frame (origin shifted so all are >= 0)."""
    vy, vx = spec.velocity
    static = [False] * spec.n_frames
    jitter = [0] * spec.n_frames
    for d in spec.defects:
        a, b = d.frame_range
        for t in range(a, b):
            if d.kind is DefectKind.STATIC_MOTION:
                static[t] = True
            elif d.kind is DefectKind.FAST_JITTER:
                amp = _round_half_up(d.severity)
                jitter[t] = amp if (t - a) % 2 == 0 else -amp
    pos = []
    y = x = 0
    for t in range(spec.n_frames):
        if t and not static[t]:
            y += vy
            x += vx
        pos.append((y, x + jitter[t]))
    min_y = min(p[0] for p in pos)
    min_x = min(p[1] for p in pos)
    return [(py - min_y, px - min_x) for py, px in pos]


def _shot_schedule(spec: ClipSpec) -> list[tuple[int, int | None, float]]:
    """Per frame: (shot, next shot or None, blend weight of the next shot)."""
    events = sorted((d for d in spec.defects if d.kind in (DefectKind.HARD_CUT, DefectKind.DISSOLVE)),
                    key=lambda d: d.frame_range)
    sched = []
    shot = 0
    ev = 0
    for t in range(spec.n_frames):
        while ev < len(events):
            d = events[ev]
            a, b = d.frame_range
            if d.kind is DefectKind.HARD_CUT and t >= a:
                shot += 1
                ev += 1
            elif d.kind is DefectKind.DISSOLVE and t >= b:
                shot += 1
                ev += 1
            else:
                break
        if ev < len(events) and events[ev].kind is DefectKind.DISSOLVE:
            a, b = events[ev].frame_range
            if a <= t < b:
                sched.append((shot, shot + 1, (t - a + 1) / (b - a + 1)))
                continue
        sched.append((shot, None, 0.0))
    return sched


def render_frames(spec: ClipSpec, seed: int) -> list[np.ndarray]:
    offsets = _offsets(spec)
    canvas_h = spec.height + max(o[0] for o in offsets) + 1
    canvas_w = spec.width + max(o[1] for o in offsets) + 1
    sched = _shot_schedule(spec)
    n_shots = max(max(s[0], s[1] or 0) for s in sched) + 1
    shots = [_Shot(seed, f"{spec.clip_id}/shot{k}", k, canvas_h, canvas_w) for k in range(n_shots)]
    frames = []
    for t in range(spec.n_frames):
        oy, ox = offsets[t]
        cur, nxt, alpha = sched[t]
        img = shots[cur].crop(oy, ox, spec.height, spec.width)
        if nxt is not None:
            img = (1 - alpha) * img + alpha * shots[nxt].crop(oy, ox, spec.height, spec.width)
        img = np.floor(img + 0.5).astype(np.int32)
        labels = category_map(spec, t)
        gray = (299 * img[..., 0] + 587 * img[..., 1] + 114 * img[..., 2] + 500) // 1000
        img[labels == BLACK] = 0
        img[labels == WHITE] = 255
        img[labels == TEXT] = TEXT_RGB
        grayed = labels == GRAYED
        img[grayed] = gray[grayed][:, None]
        frames.append(np.clip(img, 0, 255).astype(np.uint8))
    return frames


# -- ground truth ----------------------------------------------------------------

def _interval_flag(lo: float, hi: float, threshold: float, what: str, clip_id: str, frame: int) -> bool:
    """True if the statistic is certainly below threshold, False if certainly not."""
    if hi < threshold:
        return True
    if lo >= threshold:
        return False
    raise ContradictorySpec(f"{clip_id} frame {frame}: {what} in [{lo:.3g}, {hi:.3g}] straddles {threshold}")


def _category_counts(labels: np.ndarray) -> np.ndarray:
    return np.bincount(labels.ravel(), minlength=5)


def frame_truth(spec: ClipSpec, frame: int, t: StatThresholds) -> dict[str, bool]:
    labels = category_map(spec, frame)
    h, w = labels.shape
    n = labels.size
    counts = _category_counts(labels)

    text_ratio = counts[TEXT] / n
    extreme = sum(counts[c] for c in EXTREME if EXTREME[c]) / n

    dx, dy = border_depth_px(w, h, t.border_depth_ratio)
    strip = np.zeros_like(labels, dtype=bool)
    strip[:dy] = strip[h - dy:] = True
    strip[:, :dx] = strip[:, w - dx:] = True
    sc = _category_counts(labels[strip])
    if t.border_mode == "per_side":
        sides = [labels[:dy], labels[h - dy:], labels[:, :dx], labels[:, w - dx:]]
        lows, highs = [], []
        for s in sides:
            c = _category_counts(s)
            lows.append(sum(c[k] * GRAY_RANGE[k][0] for k in GRAY_RANGE) / s.size)
            highs.append(sum(c[k] * GRAY_RANGE[k][1] for k in GRAY_RANGE) / s.size)
        b_lo, b_hi = min(lows), min(highs)
    else:
        b_lo = sum(sc[k] * GRAY_RANGE[k][0] for k in GRAY_RANGE) / sc.sum()
        b_hi = sum(sc[k] * GRAY_RANGE[k][1] for k in GRAY_RANGE) / sc.sum()

    scale = 1.5 if t.variance_bessel else 1.0
    v_lo = scale * sum(counts[k] * VAR_RANGE[k][0] for k in VAR_RANGE) / n
    v_hi = scale * sum(counts[k] * VAR_RANGE[k][1] for k in VAR_RANGE) / n

    return {
        "text": text_ratio > t.text_area_ratio,
        "border": _interval_flag(b_lo, b_hi, t.border_mean_max, "border mean", spec.clip_id, frame),
        "exposure": extreme > t.exposure_pixel_ratio,
        "graying": _interval_flag(v_lo, v_hi, t.gray_variance_min, "graying score", spec.clip_id, frame),
    }


def text_boxes_for(spec: ClipSpec, frame: int) -> list[list[int]]:
    boxes = []
    for d in spec.defects:
        if d.kind is DefectKind.TEXT_OVERLAY and d.frame_range[0] <= frame < d.frame_range[1]:
            boxes.extend(b.to_list() for b in _defect_geometry(d, spec.width, spec.height))
    return boxes


def ground_truth(spec: ClipSpec, thresholds: StatThresholds = StatThresholds()) -> GroundTruth:
    raw = [frame_truth(spec, i, thresholds) for i in range(spec.n_frames)]
    k = thresholds.text_sample_interval
    flags = {name: [r[name] for r in raw] for name in FILTERS}
    # OCR runs on every k-th frame; its verdict covers the whole k-frame span
    flags["text"] = [raw[(i // k) * k]["text"] for i in range(spec.n_frames)]
    limit = Fraction(repr(float(thresholds.bad_frame_ratio)))
    clip_fail = {name: bool(Fraction(sum(f), len(f)) > limit) for name, f in flags.items()}
    cuts = sorted(d.frame_range[0] for d in spec.defects if d.kind is DefectKind.HARD_CUT)
    dissolves = sorted(list(d.frame_range) for d in spec.defects if d.kind is DefectKind.DISSOLVE)
    static_cover = set()
    for d in spec.defects:
        if d.kind is DefectKind.STATIC_MOTION:
            static_cover.update(range(max(1, d.frame_range[0]), d.frame_range[1]))
    frozen = spec.velocity == (0, 0) or static_cover >= set(range(1, spec.n_frames))
    changes = any(d.kind is not DefectKind.STATIC_MOTION for d in spec.defects)
    boxes = {i: text_boxes_for(spec, i) for i in range(spec.n_frames)}
    return GroundTruth(
        spec.clip_id, spec.n_frames, flags, clip_fail, cuts, dissolves,
        motion_static=frozen and not changes,
        text_boxes={i: b for i, b in boxes.items() if b},
    )


def generate(spec: ClipSpec, seed: int = 0,
             thresholds: StatThresholds = StatThresholds()) -> tuple[bytes, GroundTruth]:
    """Render ``spec`` to a 4:4:4 Y4M byte string plus its ground truth."""
    truth = ground_truth(spec, thresholds)
    meta = StreamMeta(spec.width, spec.height, spec.fps[0], spec.fps[1], Chroma.C444)
    return encode_y4m(meta, render_frames(spec, seed)), truth


# -- evaluation ------------------------------------------------------------------

def _pr(tp: int, fp: int, fn: int) -> dict:
    return {
        "tp": tp, "fp": fp, "fn": fn,
        "precision": tp / (tp + fp) if tp + fp else 1.0,
        "recall": tp / (tp + fn) if tp + fn else 1.0,
    }


def match_cuts(predicted: Sequence[int], truth: Sequence[int], tolerance: int = 1) -> tuple[int, int, int]:
    """Greedy one-to-one matching within ``tolerance`` frames; returns (tp, fp, fn)."""
    unmatched = sorted(truth)
    tp = 0
    for p in sorted(predicted):
        hit = next((t for t in unmatched if abs(t - p) <= tolerance), None)
        if hit is not None:
            unmatched.remove(hit)
            tp += 1
    return tp, len(predicted) - tp, len(unmatched)


def evaluate(verdicts: Mapping[str, Mapping], truths: Mapping[str, GroundTruth],
             tolerance: int = 1) -> dict[str, dict]:
    """Precision and recall per filter (positive = clip fails) and for cuts.

    ``verdicts[clip_id]`` may hold any of the filter names (bool: clip
    fails), ``"motion"`` (bool: clip fails the motion floor) and ``"cuts"``
    (list of frame indices). Kinds absent from every verdict are skipped.
    """
    if set(verdicts) != set(truths):
        raise IdMismatch(f"verdict ids and truth ids differ: "
                         f"{sorted(set(verdicts) ^ set(truths))[:5]}")
    out = {}
    for kind in (*FILTERS, "motion"):
        if not any(kind in v for v in verdicts.values()):
            continue
        tp = fp = fn = 0
        for cid, v in verdicts.items():
            if kind not in v:
                continue
            pred = bool(v[kind])
            actual = truths[cid].motion_static if kind == "motion" else truths[cid].clip_fail[kind]
            tp += pred and actual
            fp += pred and not actual
            fn += actual and not pred
        out[kind] = _pr(tp, fp, fn)
    if any("cuts" in v for v in verdicts.values()):
        tp = fp = fn = 0
        for cid, v in verdicts.items():
            a, b, c = match_cuts(v.get("cuts", []), truths[cid].cuts, tolerance)
            tp, fp, fn = tp + a, fp + b, fn + c
        out["cuts"] = _pr(tp, fp, fn)
    return out


# -- corpora ---------------------------------------------------------------------

def _frames_for(ratio: Fraction, n: int) -> int:
    return math.ceil(ratio * n)


def filter_corpus(n_clips: int = 200, seed: int = 0, thresholds: StatThresholds = StatThresholds(),
                  n_frames: int = 40, width: int = 128, height: int = 72,
                  guard: int = 15) -> list[tuple[ClipSpec, str]]:
    """Clips exercising the four statistical filters.

    Defective clips carry a defect at 1.5x its per-frame threshold on 1.5x the
    tolerated share of frames; clean variants carry 0.5x defects throughout,
    or a full-strength defect on under the tolerated share of frames.
    Defect runs stay within ``guard`` frames (the shot splitter's minimum
    scene length) of either end so splitting never cuts a clip apart.
    Returns ``(spec, intent)`` pairs; ``intent`` names the filter the clip is
    meant to fail, or ``"clean"``.
    """
    t = thresholds
    bad = Fraction(str(t.bad_frame_ratio))
    m_bad = _frames_for(Fraction(3, 2) * bad, n_frames)
    m_ok = max(1, math.floor(Fraction(1, 2) * bad * n_frames))
    k = t.text_sample_interval
    K = DefectKind
    sev = {
        K.TEXT_OVERLAY: 1.5 * t.text_area_ratio,
        K.BLACK_BORDER: 1.5 * t.border_depth_ratio,
        K.OVEREXPOSURE: 1.5 * t.exposure_pixel_ratio,
        K.UNDEREXPOSURE: 1.5 * t.exposure_pixel_ratio,
        K.GRAY_FRAMES: 1.0,
    }
    recipes = [
        ("clean", None, None, None),
        ("text", K.TEXT_OVERLAY, "bad", 1.0),
        ("clean", K.TEXT_OVERLAY, "all", 0.5),
        ("border", K.BLACK_BORDER, "bad", 1.0),
        ("clean", K.BLACK_BORDER, "all", 0.5),
        ("exposure", K.OVEREXPOSURE, "bad", 1.0),
        ("clean", K.OVEREXPOSURE, "few", 1.0),
        ("exposure", K.UNDEREXPOSURE, "bad", 1.0),
        ("clean", K.UNDEREXPOSURE, "all", 0.5),
        ("graying", K.GRAY_FRAMES, "bad", 1.0),
        ("clean", K.GRAY_FRAMES, "all", 0.5),
        ("clean", K.BLACK_BORDER, "few", 1.0),
    ]
    out = []
    for i in range(n_clips):
        intent, kind, span, scale = recipes[i % len(recipes)]
        defects = []
        if kind is not None:
            if span == "all":
                rng = (0, n_frames)
            else:
                m = m_bad if span == "bad" else m_ok
                # both edges of the run must sit where no cut is allowed, or the
                # shot splitter would carve the defect into its own clip
                starts = [s for s in range(n_frames - m + 1)
                          if (s + m < guard or s > n_frames - guard)
                          and (kind is not K.TEXT_OVERLAY or s % k == 0)]
                start = starts[(7 * i) % len(starts)]
                rng = (start, start + m)
            defects.append(DefectSpec(kind, rng, sev[kind] * scale))
        velocity = (0, 1)
        if kind is None and (i // len(recipes)) % 2:
            velocity = (0, 0)
        out.append((ClipSpec(f"clip{i:04d}", n_frames, width, height, (10, 1), velocity, tuple(defects)), intent))
    return out


def cut_corpus(n_clips: int = 50, seed: int = 0, n_frames: int = 90, min_gap: int = 20,
               width: int = 128, height: int = 72) -> list[ClipSpec]:
    """Clips with hard cuts at seeded positions between slow-pan or static shots."""
    out = []
    for i in range(n_clips):
        rng = PortableRNG(seed, f"cuts{i}")
        n_cuts = rng.randbelow(3)
        cuts = []
        pos = 0
        for _ in range(n_cuts):
            lo = pos + min_gap
            hi = n_frames - min_gap * (n_cuts - len(cuts))
            if hi <= lo:
                break
            pos = lo + rng.randbelow(hi - lo)
            cuts.append(pos)
        velocity = ((0, 0), (0, 1), (1, 1), (0, 2))[rng.randbelow(4)]
        defects = tuple(DefectSpec(DefectKind.HARD_CUT, (c, c + 1)) for c in cuts)
        out.append(ClipSpec(f"cut{i:03d}", n_frames, width, height, (30, 1), velocity, defects))
    return out


def write_corpus(out_dir: str | Path, specs: Iterable[ClipSpec], seed: int = 0,
                 thresholds: StatThresholds = StatThresholds()) -> list[GroundTruth]:
    """Write ``corpus/NNN.y4m`` files plus ``truth.jsonl`` (one line per clip)."""
    out_dir = Path(out_dir)
    corpus = out_dir / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    truths = []
    lines = []
    for i, spec in enumerate(specs):
        data, truth = generate(spec, seed, thresholds)
        name = f"{i:03d}"
        (corpus / f"{name}.y4m").write_bytes(data)
        truths.append(truth)
        lines.append(json.dumps({"file": f"corpus/{name}.y4m", "source_id": name, "spec": spec.to_dict(),
                                 "truth": truth.to_dict()}, sort_keys=True, separators=(",", ":")))
    (out_dir / "truth.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return truths


def load_truth(path: str | Path) -> dict[str, dict]:
    """``truth.jsonl`` keyed by source id."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rec = json.loads(line)
            out[rec["source_id"]] = rec
    return out


def truth_textbox_lookup(truth_path: str | Path):
    """OCR stand-in for synthetic corpora: ``f(source_id, frame) -> boxes``."""
    recs = load_truth(truth_path)
    boxes = {sid: {int(k): v for k, v in rec["truth"]["text_boxes"].items()} for sid, rec in recs.items()}

    def lookup(source_id: str, frame_index: int) -> list:
        return boxes.get(source_id, {}).get(frame_index, [])

    return lookup
