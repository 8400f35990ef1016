"""Clip duration rules and window extraction.

Clips of 3-10 s (inclusive) form the short set; longer clips form the long
set and additionally yield 10 s short windows: the centred window, plus one
flush with each end when the clip runs past 60 s.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Real

from .errors import NonPositiveDuration, NotLongClip

SHORT_MIN_S = 3
SHORT_MAX_S = 10
WINDOW_S = 10
SIDE_WINDOWS_AFTER_S = 60


class ClipSet(str, enum.Enum):
    SHORT = "Short"
    LONG = "Long"
    DISCARD = "Discard"


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # 10.1 must compare as 10.1, not as its binary neighbour
        return Fraction(repr(x))
    return Fraction(x)


def classify(duration_s: Real) -> ClipSet:
    d = _exact(duration_s)
    if d <= 0:
        raise NonPositiveDuration(f"duration must be positive, got {duration_s}")
    if d < SHORT_MIN_S:
        return ClipSet.DISCARD
    if d <= SHORT_MAX_S:
        return ClipSet.SHORT
    return ClipSet.LONG


@dataclass(frozen=True)
class ClipRecord:
    id: str
    source_id: str
    start_frame: int
    end_frame: int
    fps_num: int
    fps_den: int
    width: int
    height: int
    set: ClipSet | None = None
    parent_id: str | None = None

    def __post_init__(self):
        if self.end_frame <= self.start_frame:
            raise ValueError(f"empty frame range [{self.start_frame}, {self.end_frame})")
        if self.start_frame < 0:
            raise ValueError("start_frame must be >= 0")
        if self.fps_num <= 0 or self.fps_den <= 0:
            raise ValueError("fps must be positive")
        if self.set is None:
            object.__setattr__(self, "set", classify(self.duration))
        elif not isinstance(self.set, ClipSet):
            object.__setattr__(self, "set", ClipSet(self.set))

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame

    @property
    def fps(self) -> Fraction:
        return Fraction(self.fps_num, self.fps_den)

    @property
    def duration(self) -> Fraction:
        return Fraction(self.n_frames * self.fps_den, self.fps_num)

    @property
    def duration_s(self) -> float:
        return float(self.duration)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_id": self.source_id,
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "fps_num": self.fps_num,
            "fps_den": self.fps_den,
            "duration_s": self.duration_s,
            "width": self.width,
            "height": self.height,
            "set": self.set.value,
            "parent_id": self.parent_id,
        }

    @classmethod
    def from_dict(cls, d) -> "ClipRecord":
        fields = {k: d[k] for k in ("id", "source_id", "start_frame", "end_frame", "fps_num",
                                     "fps_den", "width", "height")}
        return cls(**fields, set=ClipSet(d["set"]), parent_id=d.get("parent_id"))


def clip_id(source_id: str, start: int, end: int) -> str:
    return f"{source_id}_{start:07d}_{end:07d}"


def window_frames(fps: Fraction, seconds: int = WINDOW_S) -> int:
    """Frames in a ``seconds``-long window: ``floor(seconds * fps)``.

    Rounding up would make 29.97 fps windows 300 frames = 10.01 s, which no
    longer classifies as Short. For integer rates floor and round agree.
    """
    return int(seconds * Fraction(fps) // 1)


def extract_shorts_from_long(long_clip: ClipRecord, side_anchor: str = "edges") -> list[ClipRecord]:
    """Cut 10 s short windows out of a long clip.

    Up to 60 s: the centred window only. Beyond 60 s, also one window per
    side: flush with the clip edges (``side_anchor="edges"``) or centred on
    the quarter points (``"quarter_centers"``). Odd leftover frames push
    the centred window left.
    """
    if long_clip.set is not ClipSet.LONG:
        raise NotLongClip(f"{long_clip.id} is {long_clip.set.value}, not Long")
    if side_anchor not in ("edges", "quarter_centers"):
        raise ValueError(f"unknown side_anchor {side_anchor!r}")
    n = long_clip.n_frames
    length = window_frames(long_clip.fps)
    starts = [(n - length) // 2]
    if long_clip.duration > SIDE_WINDOWS_AFTER_S:
        if side_anchor == "edges":
            starts = [0, starts[0], n - length]
        else:
            starts = [max(0, n // 4 - length // 2), starts[0], min(n - length, (3 * n) // 4 - length // 2)]
    out = []
    for s in starts:
        a = long_clip.start_frame + s
        b = a + length
        out.append(replace(long_clip, id=clip_id(long_clip.source_id, a, b), start_frame=a,
                           end_frame=b, set=ClipSet.SHORT, parent_id=long_clip.id))
    return out


def subclip_sample(n_frames: int, target_frames: int) -> tuple[int, int]:
    """Centred contiguous window of ``min(n_frames, target_frames)`` frames."""
    if n_frames < 1 or target_frames < 1:
        raise ValueError("n_frames and target_frames must be >= 1")
    t = min(n_frames, target_frames)
    start = (n_frames - t) // 2
    return start, start + t
