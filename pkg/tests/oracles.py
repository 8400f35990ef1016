"""Slow, obviously-correct reference implementations used as test oracles.

Each one takes the plainest route available (rasterizing, boolean masks,
pure-Python loops, float64 numpy) so it shares no code path with the
package under test.
"""

import numpy as np


def gray_per_pixel(rgb):
    """round(0.299 R + 0.587 G + 0.114 B) with halves rounded up, via divmod."""
    acc = rgb[..., 0].astype(np.int64) * 299 + rgb[..., 1].astype(np.int64) * 587 + rgb[..., 2].astype(np.int64) * 114
    q, r = np.divmod(acc, 1000)
    return q + (r >= 500)


def text_ratio_raster(width, height, boxes):
    mask = np.zeros((height, width), dtype=bool)
    for x0, y0, x1, y1 in boxes:
        mask[y0:y1, x0:x1] = True
    return mask.sum() / (width * height)


def border_mask(width, height, depth_ratio):
    dx = max(1, int(np.floor(depth_ratio * width + 0.5)))
    dy = max(1, int(np.floor(depth_ratio * height + 0.5)))
    ys, xs = np.mgrid[0:height, 0:width]
    return (xs < dx) | (xs >= width - dx) | (ys < dy) | (ys >= height - dy)


def border_mean_mask(rgb, depth_ratio=0.03):
    h, w = rgb.shape[:2]
    gray = gray_per_pixel(rgb)
    return gray[border_mask(w, h, depth_ratio)].astype(np.float64).mean()


def border_mean_loop(rgb, depth_ratio=0.03):
    h, w = rgb.shape[:2]
    dx = max(1, int(np.floor(depth_ratio * w + 0.5)))
    dy = max(1, int(np.floor(depth_ratio * h + 0.5)))
    total = count = 0
    for y in range(h):
        for x in range(w):
            if x < dx or x >= w - dx or y < dy or y >= h - dy:
                r, g, b = (int(c) for c in rgb[y, x])
                q, rem = divmod(299 * r + 587 * g + 114 * b, 1000)
                total += q + (rem >= 500)
                count += 1
    return total / count


def exposure_ratio_mask(rgb, low=5, high=250):
    gray = gray_per_pixel(rgb)
    return np.count_nonzero((gray > high) | (gray < low)) / gray.size


def graying_float(rgb):
    return float(np.var(rgb.astype(np.float64), axis=2).mean())


def graying_loop(rgb):
    h, w = rgb.shape[:2]
    total = 0.0
    for y in range(h):
        for x in range(w):
            vals = [float(c) for c in rgb[y, x]]
            m = sum(vals) / 3
            total += sum((v - m) ** 2 for v in vals) / 3
    return total / (h * w)


def block_field_bruteforce(prev, cur, block=16, radius=8):
    """Pure-Python exhaustive SAD block matching with the documented tie-break."""
    prev = prev.astype(np.int64)
    cur = cur.astype(np.int64)
    h, w = cur.shape
    out = np.zeros((h // block, w // block, 2), dtype=np.int64)
    for by in range(h // block):
        for bx in range(w // block):
            y, x = by * block, bx * block
            tile = cur[y:y + block, x:x + block]
            best = None
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    sy, sx = y + dy, x + dx
                    if sy < 0 or sx < 0 or sy + block > h or sx + block > w:
                        continue
                    sad = int(np.abs(tile - prev[sy:sy + block, sx:sx + block]).sum())
                    key = (sad, dy * dy + dx * dx, dy, dx)
                    if best is None or key < best:
                        best = key
            out[by, bx] = (-best[2], -best[3])
    return out


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(abs(a), abs(b)) or a == b
