"""Input validation helpers for the estimator front-ends."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, EmptyClip
from .frame_io import Frame


def as_rgb(frame) -> np.ndarray:
    """Return the ``(H, W, 3)`` uint8 view of a Frame or array."""
    if isinstance(frame, Frame):
        return frame.rgb
    arr = np.asarray(frame)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) frame, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("pixel values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def check_frames(X: Iterable, *, min_frames: int = 1) -> list[np.ndarray]:
    """Validate a clip: a sequence of equally sized RGB frames.

    Accepts a list of :class:`Frame` objects, a list of arrays, or a 4-D
    ``(n, H, W, 3)`` array.
    """
    if isinstance(X, np.ndarray) and X.ndim == 4:
        frames = [as_rgb(f) for f in X]
    else:
        frames = [as_rgb(f) for f in X]
    if len(frames) < min_frames:
        raise EmptyClip(f"need at least {min_frames} frame(s), got {len(frames)}")
    shape = frames[0].shape
    for i, f in enumerate(frames):
        if f.shape != shape:
            raise DimensionMismatch(f"frame {i} has shape {f.shape}, expected {shape}")
    return frames


def frame_indices(X) -> list[int]:
    return [f.index if isinstance(f, Frame) else i for i, f in enumerate(X)]
