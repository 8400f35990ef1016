"""Raw video stream readers and writers.

Supports YUV4MPEG2 (``.y4m``) streams and numbered binary PPM/PGM image
sequences (``frame_%06d.ppm``). Every decoded frame is exposed as 8-bit RGB
produced by an integer-only limited-range BT.601 conversion, so filters see
bit-identical pixels on every platform.

Compressed containers are not decoded here. Convert them first, e.g.::

    ffmpeg -i input.mp4 -pix_fmt yuv420p -f yuv4mpegpipe output.y4m
"""

from __future__ import annotations

import enum
import io
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np

from .errors import (
    BadFrameMarker,
    MalformedRational,
    MissingDimension,
    MissingSignature,
    StreamError,
    TruncatedFrame,
    UnsupportedChroma,
)

SIGNATURE = b"YUV4MPEG2"
MAX_PIXELS = 8192 * 4320


class Chroma(str, enum.Enum):
    C420 = "420"
    C422 = "422"
    C444 = "444"
    MONO = "mono"


_CHROMA_TOKENS = {
    "420": Chroma.C420,
    "420jpeg": Chroma.C420,
    "420mpeg2": Chroma.C420,
    "420paldv": Chroma.C420,
    "422": Chroma.C422,
    "444": Chroma.C444,
    "mono": Chroma.MONO,
}


@dataclass(frozen=True)
class StreamMeta:
    width: int
    height: int
    fps_num: int
    fps_den: int
    chroma: Chroma = Chroma.C420
    frame_count: int | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise StreamError(f"non-positive dimensions {self.width}x{self.height}")
        if self.width * self.height > MAX_PIXELS:
            raise StreamError(f"{self.width}x{self.height} exceeds the 8192x4320 guard")
        if self.fps_num <= 0 or self.fps_den <= 0:
            raise MalformedRational(f"frame rate {self.fps_num}:{self.fps_den}")
        if self.chroma in (Chroma.C420, Chroma.C422) and self.width % 2:
            raise UnsupportedChroma(f"odd width {self.width} with {self.chroma.value} subsampling")
        if self.chroma is Chroma.C420 and self.height % 2:
            raise UnsupportedChroma(f"odd height {self.height} with 420 subsampling")

    @property
    def fps(self) -> Fraction:
        return Fraction(self.fps_num, self.fps_den)

    @property
    def plane_shapes(self) -> list[tuple[int, int]]:
        w, h = self.width, self.height
        if self.chroma is Chroma.MONO:
            return [(h, w)]
        if self.chroma is Chroma.C420:
            return [(h, w), (h // 2, w // 2), (h // 2, w // 2)]
        if self.chroma is Chroma.C422:
            return [(h, w), (h, w // 2), (h, w // 2)]
        return [(h, w)] * 3

    @property
    def frame_bytes(self) -> int:
        return sum(h * w for h, w in self.plane_shapes)

    def to_header(self) -> bytes:
        return format_y4m_header(self)

    def summary(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "fps_num": self.fps_num,
            "fps_den": self.fps_den,
            "chroma": self.chroma.value,
            "frame_count": self.frame_count,
        }


@dataclass(frozen=True, eq=False)
class Frame:
    """One decoded frame. ``rgb`` is a read-only ``(H, W, 3)`` uint8 array."""

    index: int
    rgb: np.ndarray
    luma: np.ndarray | None = None

    def __post_init__(self):
        rgb = np.asarray(self.rgb)
        if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"rgb must be (H, W, 3) uint8, got {rgb.dtype} {rgb.shape}")
        if not rgb.flags.c_contiguous:
            rgb = np.ascontiguousarray(rgb)
        if rgb.flags.writeable:
            rgb = rgb.copy()
            rgb.flags.writeable = False
        object.__setattr__(self, "rgb", rgb)
        if self.luma is not None:
            luma = np.asarray(self.luma, dtype=np.uint8)
            if luma.shape != rgb.shape[:2]:
                raise ValueError("luma plane does not match rgb dimensions")
            if luma.flags.writeable:
                luma = luma.copy()
                luma.flags.writeable = False
            object.__setattr__(self, "luma", luma)

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.rgb, other.rgb)

    __hash__ = None


# -- colour conversion -------------------------------------------------------

def _round_div(x, d: int):
    """Round-half-up integer division, valid for negative numerators too."""
    return (x + d // 2) // d


def yuv_to_rgb(y, u, v):
    """Limited-range BT.601 YUV -> RGB using integer thousandths.

    Works on Python ints and numpy integer arrays alike; results are
    clamped to ``[0, 255]``.
    """
    scalar = np.isscalar(y) and np.isscalar(u) and np.isscalar(v)
    y = np.asarray(y, dtype=np.int32) - 16
    u = np.asarray(u, dtype=np.int32) - 128
    v = np.asarray(v, dtype=np.int32) - 128
    c = 1164 * y
    r = np.clip(_round_div(c + 1596 * v, 1000), 0, 255)
    g = np.clip(_round_div(c - 813 * v - 391 * u, 1000), 0, 255)
    b = np.clip(_round_div(c + 2018 * u, 1000), 0, 255)
    if scalar:
        return int(r), int(g), int(b)
    return r.astype(np.uint8), g.astype(np.uint8), b.astype(np.uint8)


def rgb_to_yuv(r, g, b):
    """Inverse of :func:`yuv_to_rgb` (limited range, integer thousandths)."""
    scalar = np.isscalar(r) and np.isscalar(g) and np.isscalar(b)
    r = np.asarray(r, dtype=np.int32)
    g = np.asarray(g, dtype=np.int32)
    b = np.asarray(b, dtype=np.int32)
    y = np.clip(16 + _round_div(257 * r + 504 * g + 98 * b, 1000), 0, 255)
    u = np.clip(128 + _round_div(-148 * r - 291 * g + 439 * b, 1000), 0, 255)
    v = np.clip(128 + _round_div(439 * r - 368 * g - 71 * b, 1000), 0, 255)
    if scalar:
        return int(y), int(u), int(v)
    return y.astype(np.uint8), u.astype(np.uint8), v.astype(np.uint8)


def planes_to_rgb(planes: list[np.ndarray], meta: StreamMeta) -> np.ndarray:
    y = planes[0]
    if meta.chroma is Chroma.MONO:
        return np.repeat(y[:, :, None], 3, axis=2)
    u, v = planes[1], planes[2]
    if meta.chroma is Chroma.C420:
        u = u.repeat(2, axis=0).repeat(2, axis=1)
        v = v.repeat(2, axis=0).repeat(2, axis=1)
    elif meta.chroma is Chroma.C422:
        u = u.repeat(2, axis=1)
        v = v.repeat(2, axis=1)
    r, g, b = yuv_to_rgb(y, u, v)
    return np.stack([r, g, b], axis=2)


def rgb_to_planes(rgb: np.ndarray, chroma: Chroma) -> list[np.ndarray]:
    """Encode RGB to planar YUV. Subsampled chroma uses the top-left sample."""
    y, u, v = rgb_to_yuv(rgb[..., 0], rgb[..., 1], rgb[..., 2])
    if chroma is Chroma.MONO:
        return [y]
    if chroma is Chroma.C420:
        return [y, np.ascontiguousarray(u[::2, ::2]), np.ascontiguousarray(v[::2, ::2])]
    if chroma is Chroma.C422:
        return [y, np.ascontiguousarray(u[:, ::2]), np.ascontiguousarray(v[:, ::2])]
    return [y, u, v]


# -- YUV4MPEG2 ----------------------------------------------------------------

def _parse_rational(token: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+):(\d+)", token)
    if not m:
        raise MalformedRational(f"bad rational {token!r}")
    num, den = int(m.group(1)), int(m.group(2))
    if num <= 0 or den <= 0:
        raise MalformedRational(f"bad rational {token!r}")
    return num, den


def parse_y4m_header(data: bytes) -> tuple[StreamMeta, int]:
    """Parse the signature line at the start of ``data``.

    Returns the metadata and the number of bytes consumed, including the
    terminating newline.
    """
    if not data.startswith(SIGNATURE + b" ") and data[: len(SIGNATURE) + 1] != SIGNATURE + b"\n":
        raise MissingSignature("stream does not start with YUV4MPEG2")
    end = data.find(b"\n")
    if end < 0:
        raise MissingSignature("unterminated YUV4MPEG2 header")
    tokens = data[len(SIGNATURE):end].decode("ascii", errors="replace").split()
    width = height = None
    fps = (30, 1)
    chroma = Chroma.C420
    for tok in tokens:
        tag, val = tok[0], tok[1:]
        if tag == "W":
            width = int(val)
        elif tag == "H":
            height = int(val)
        elif tag == "F":
            fps = _parse_rational(val)
        elif tag == "A":
            if val != "0:0":
                _parse_rational(val)
        elif tag == "C":
            if val not in _CHROMA_TOKENS:
                raise UnsupportedChroma(f"chroma {val!r}")
            chroma = _CHROMA_TOKENS[val]
        # I (interlace) and X (extensions) are accepted and ignored.
    if width is None or height is None:
        raise MissingDimension("header lacks W or H")
    return StreamMeta(width, height, fps[0], fps[1], chroma), end + 1


def format_y4m_header(meta: StreamMeta) -> bytes:
    return (
        f"YUV4MPEG2 W{meta.width} H{meta.height} F{meta.fps_num}:{meta.fps_den} "
        f"Ip A1:1 C{meta.chroma.value}\n"
    ).encode("ascii")


class Y4MReader:
    """Single-consumer reader over a binary Y4M stream.

    >>> reader = Y4MReader.open("clip.y4m")     # doctest: +SKIP
    >>> for frame in reader: ...                # doctest: +SKIP
    """

    def __init__(self, stream: BinaryIO):
        self._stream = stream
        head = self._read_line(limit=4096)
        self.meta, _ = parse_y4m_header(head)
        self._next_index = 0
        self._data_start = stream.tell() if stream.seekable() else None

    @classmethod
    def open(cls, path: str | os.PathLike) -> "Y4MReader":
        return cls(open(path, "rb"))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Y4MReader":
        return cls(io.BytesIO(data))

    def close(self):
        self._stream.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_line(self, limit: int) -> bytes:
        buf = bytearray()
        while len(buf) < limit:
            ch = self._stream.read(1)
            if not ch:
                break
            buf += ch
            if ch == b"\n":
                break
        return bytes(buf)

    def _read_marker(self) -> bool:
        line = self._read_line(limit=1024)
        if not line:
            return False
        if not line.startswith(b"FRAME") or not line.endswith(b"\n"):
            raise BadFrameMarker(f"expected FRAME marker at frame {self._next_index}, got {line[:16]!r}")
        if len(line) > 6 and line[5:6] != b" ":
            raise BadFrameMarker(f"malformed FRAME marker {line[:16]!r}")
        return True

    def next_frame(self) -> Frame | None:
        """Decode the next frame, or return ``None`` at end of stream."""
        if not self._read_marker():
            return None
        payload = self._stream.read(self.meta.frame_bytes)
        if len(payload) != self.meta.frame_bytes:
            raise TruncatedFrame(
                f"frame {self._next_index}: expected {self.meta.frame_bytes} bytes, got {len(payload)}"
            )
        planes = []
        offset = 0
        for h, w in self.meta.plane_shapes:
            planes.append(np.frombuffer(payload, np.uint8, h * w, offset).reshape(h, w))
            offset += h * w
        frame = Frame(self._next_index, planes_to_rgb(planes, self.meta), luma=planes[0])
        self._next_index += 1
        return frame

    def skip_frame(self) -> bool:
        if not self._read_marker():
            return False
        if self._stream.seekable():
            pos = self._stream.tell()
            self._stream.seek(0, os.SEEK_END)
            size = self._stream.tell()
            if size - pos < self.meta.frame_bytes:
                raise TruncatedFrame(f"frame {self._next_index} truncated")
            self._stream.seek(pos + self.meta.frame_bytes)
        else:
            if len(self._stream.read(self.meta.frame_bytes)) != self.meta.frame_bytes:
                raise TruncatedFrame(f"frame {self._next_index} truncated")
        self._next_index += 1
        return True

    def __iter__(self) -> Iterator[Frame]:
        while True:
            frame = self.next_frame()
            if frame is None:
                return
            yield frame


def read_y4m(path: str | os.PathLike, start: int = 0, stop: int | None = None) -> tuple[StreamMeta, list[Frame]]:
    """Read frames ``[start, stop)`` from a Y4M file."""
    with Y4MReader.open(path) as reader:
        for _ in range(start):
            if not reader.skip_frame():
                return reader.meta, []
        frames = []
        while stop is None or reader._next_index < stop:
            frame = reader.next_frame()
            if frame is None:
                break
            frames.append(frame)
        return reader.meta, frames


def count_y4m_frames(path: str | os.PathLike) -> int:
    with Y4MReader.open(path) as reader:
        n = 0
        while reader.skip_frame():
            n += 1
        return n


def probe_y4m(path: str | os.PathLike) -> StreamMeta:
    """Header plus frame count."""
    with Y4MReader.open(path) as reader:
        meta = reader.meta
    n = count_y4m_frames(path)
    return StreamMeta(meta.width, meta.height, meta.fps_num, meta.fps_den, meta.chroma, n)


def encode_y4m(meta: StreamMeta, frames: list[np.ndarray]) -> bytes:
    """Serialize RGB frames (``(H, W, 3)`` uint8) as a Y4M byte string."""
    out = bytearray(format_y4m_header(meta))
    for rgb in frames:
        if rgb.shape != (meta.height, meta.width, 3):
            raise ValueError(f"frame shape {rgb.shape} does not match {meta.width}x{meta.height}")
        out += b"FRAME\n"
        for plane in rgb_to_planes(rgb, meta.chroma):
            out += plane.tobytes()
    return bytes(out)


def encode_y4m_planes(meta: StreamMeta, frames: list[list[np.ndarray]]) -> bytes:
    """Serialize already-planar YUV frames."""
    out = bytearray(format_y4m_header(meta))
    for planes in frames:
        out += b"FRAME\n"
        for plane, shape in zip(planes, meta.plane_shapes):
            if plane.shape != shape:
                raise ValueError(f"plane shape {plane.shape} != {shape}")
            out += np.ascontiguousarray(plane, dtype=np.uint8).tobytes()
    return bytes(out)


# -- PPM / PGM sequences -----------------------------------------------------

_PNM_TOKEN = re.compile(rb"(#[^\n]*\n)|(\s+)|([^\s#]+)")


def read_pnm(data: bytes, index: int = 0) -> Frame:
    """Decode one binary PPM (P6) or PGM (P5) image with maxval 255."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = _PNM_TOKEN.match(data, pos)
        if not m:
            raise StreamError("truncated PNM header")
        pos = m.end()
        if m.group(3):
            tokens.append(m.group(3))
    pos += 1  # exactly one whitespace byte follows maxval
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise StreamError(f"only maxval 255 is supported, got {maxval}")
    channels = {b"P6": 3, b"P5": 1}.get(magic)
    if channels is None:
        raise MissingSignature(f"unsupported PNM magic {magic!r}")
    need = w * h * channels
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise TruncatedFrame(f"PNM raster has {len(raster)} of {need} bytes")
    arr = np.frombuffer(raster, np.uint8).reshape(h, w, channels)
    if channels == 1:
        return Frame(index, np.repeat(arr, 3, axis=2), luma=arr[:, :, 0])
    return Frame(index, arr)


def encode_pnm(rgb: np.ndarray, gray: bool = False) -> bytes:
    h, w = rgb.shape[:2]
    if gray:
        plane = rgb[..., 0] if rgb.ndim == 3 else rgb
        return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(plane, np.uint8).tobytes()
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(rgb, np.uint8).tobytes()


_SEQ_NAME = re.compile(r"frame_(\d{6})\.(ppm|pgm)$")


def list_sequence(directory: str | os.PathLike) -> list[Path]:
    files = [p for p in Path(directory).iterdir() if _SEQ_NAME.match(p.name)]
    return sorted(files, key=lambda p: int(_SEQ_NAME.match(p.name).group(1)))


def read_sequence(directory: str | os.PathLike, fps: tuple[int, int] = (30, 1),
                  start: int = 0, stop: int | None = None) -> tuple[StreamMeta, list[Frame]]:
    """Read a numbered ``frame_%06d.ppm``/``.pgm`` directory.

    Image files carry no timing, so the frame rate is supplied by the caller.
    """
    files = list_sequence(directory)
    if not files:
        raise StreamError(f"no frame_%06d.ppm/pgm files in {directory}")
    frames = []
    for i, path in enumerate(files[start:stop], start):
        frames.append(read_pnm(path.read_bytes(), i))
    first = frames[0] if frames else read_pnm(files[0].read_bytes())
    meta = StreamMeta(first.width, first.height, fps[0], fps[1], Chroma.C444, len(files))
    return meta, frames


def write_sequence(directory: str | os.PathLike, frames: list[np.ndarray], gray: bool = False):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = "pgm" if gray else "ppm"
    for i, rgb in enumerate(frames):
        (directory / f"frame_{i:06d}.{ext}").write_bytes(encode_pnm(rgb, gray))
