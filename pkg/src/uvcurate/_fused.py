"""Single-pass per-frame statistics, compiled with numba when it is installed.

One sweep over the pixels yields everything the border, exposure and
graying filters need, in exact integer arithmetic:

* ``grid``: luma sums over the 3x3 partition of the frame by the border
  depths (rows: top strip, middle, bottom strip; columns likewise)
* ``extreme``: pixels whose luma lies outside ``[low, high]``
* ``pair``: sum over pixels of ``(R-G)^2 + (R-B)^2 + (G-B)^2``, which
  equals ``3 * sum(x^2) - (sum x)^2`` per pixel
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

# int32 accumulators stay below 2**31 for runs of this many pixels
CHUNK = 8192
_I3, _I23, _I114, _I299, _I500, _I587, _I67109 = (np.int32(v) for v in (3, 23, 114, 299, 500, 587, 67109))


def _luma(r, g, b):
    # (n + 500) // 1000 for n <= 255000, as //8 then //125 by multiply-shift;
    # exact over the whole range and free of 64-bit intermediates
    acc = _I299 * r + _I587 * g + _I114 * b + _I500
    return ((acc >> _I3) * _I67109) >> _I23


def _run_sums(row, x0, x1, low, high):
    lsum = np.int32(0)
    ext = np.int32(0)
    pair = np.int32(0)
    for x in range(x0, x1):
        r = np.int32(row[x, 0])
        g = np.int32(row[x, 1])
        b = np.int32(row[x, 2])
        lum = _luma(r, g, b)
        ext += np.int32(lum > high) + np.int32(lum < low)
        pair += (r - g) * (r - g) + (r - b) * (r - b) + (g - b) * (g - b)
        lsum += lum
    return lsum, ext, pair


def _frame_sums(rgb, dx, dy, low, high):
    h, w = rgb.shape[0], rgb.shape[1]
    grid = np.zeros((3, 3), dtype=np.int64)
    extreme = 0
    pair = 0
    low32 = np.int32(low)
    high32 = np.int32(high)
    bounds = (0, dx, w - dx, w)
    for y in range(h):
        band = 0 if y < dy else (2 if y >= h - dy else 1)
        row = rgb[y]
        for c in range(3):
            for x0 in range(bounds[c], bounds[c + 1], CHUNK):
                s, e, p = _run_sums(row, x0, min(x0 + CHUNK, bounds[c + 1]), low32, high32)
                grid[band, c] += s
                extreme += e
                pair += p
    return grid, extreme, pair


if numba is not None:
    _luma = numba.njit(inline="always")(_luma)
    _run_sums = numba.njit(inline="always")(_run_sums)
    frame_sums = numba.njit(cache=True, nogil=True)(_frame_sums)
else:  # pragma: no cover
    frame_sums = None

AVAILABLE = frame_sums is not None
