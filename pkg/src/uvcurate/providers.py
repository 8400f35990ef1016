"""Model-backed scorers reached over a small JSON-over-HTTP protocol.

Every external model (quality score, caption similarity, attribute judge,
frame embedder, OCR, captioner, summarizer, optional optical flow) is a
*provider*. A request is one HTTP POST::

    {"clip_id": "...", "kind": "vtss", "payload": {...},
     "frames": [{"index": 12, "png_base64": "..."}]}

and the reply echoes ``clip_id`` and ``kind`` with a kind-specific
``result``:

============  ==========================================================
kind          result
============  ==========================================================
vtss          float
similarity    float in [-1, 1]
attributes    object with exactly the 16 attribute names -> bool
embedding     list (one per frame) of unit-norm float lists
textboxes     list (one per frame) of ``[x0, y0, x1, y1]`` lists
caption       object with exactly the 9 caption category names -> str
summary       non-empty string
flow          non-negative float (replaces the native motion scorer)
============  ==========================================================

Tests and offline runs use :class:`MockProvider`, which implements the same
``request`` method in-process.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import math
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .errors import ProviderMalformedResponse, ProviderUnavailable
from .frame_io import Frame

log = logging.getLogger(__name__)

KINDS = ("vtss", "similarity", "attributes", "embedding", "textboxes", "caption", "summary", "flow")

ATTRIBUTES = (
    "Subtitles",
    "AbnormalColorPatches",
    "GreenScreen",
    "BlueScreen",
    "TransitionEffects",
    "Watermarks",
    "Stickers",
    "Borders",
    "SplitScreens",
    "ScreenRecordings",
    "PictureInPicture",
    "StillVideo",
    "BlurredVideo",
    "ScrambledVideo",
    "SolidColorBackgrounds",
    "Other",
)

CAPTION_FIELDS = (
    "brief",
    "detailed",
    "background",
    "theme",
    "style",
    "shot_type",
    "camera_movement",
    "lighting",
    "atmosphere",
)


class Provider(Protocol):
    def request(self, kind: str, clip_id: str, frames: Sequence[Frame], payload: Mapping | None = None): ...


# -- result validation ------------------------------------------------------

def _number(x, kind):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ProviderMalformedResponse(f"{kind}: expected a finite number, got {x!r}")
    return float(x)


def _exact_keys(d, names, kind):
    if not isinstance(d, Mapping):
        raise ProviderMalformedResponse(f"{kind}: expected an object, got {type(d).__name__}")
    missing = [n for n in names if n not in d]
    extra = [k for k in d if k not in names]
    if missing or extra:
        raise ProviderMalformedResponse(
            f"{kind}: expected {len(names)} fields; missing={missing} extra={extra}")


def validate_result(kind: str, result, n_frames: int | None = None):
    """Check a provider result against its kind's schema and normalise it."""
    if kind in ("vtss",):
        return _number(result, kind)
    if kind == "similarity":
        v = _number(result, kind)
        if not -1.0 <= v <= 1.0:
            raise ProviderMalformedResponse(f"similarity {v} outside [-1, 1]")
        return v
    if kind == "flow":
        v = _number(result, kind)
        if v < 0:
            raise ProviderMalformedResponse(f"flow score {v} is negative")
        return v
    if kind == "attributes":
        _exact_keys(result, ATTRIBUTES, kind)
        if not all(isinstance(result[n], bool) for n in ATTRIBUTES):
            raise ProviderMalformedResponse("attributes: every value must be a boolean")
        return {n: result[n] for n in ATTRIBUTES}
    if kind == "caption":
        _exact_keys(result, CAPTION_FIELDS, kind)
        if not all(isinstance(result[n], str) for n in CAPTION_FIELDS):
            raise ProviderMalformedResponse("caption: every value must be a string")
        return {n: result[n] for n in CAPTION_FIELDS}
    if kind == "summary":
        if not isinstance(result, str):
            raise ProviderMalformedResponse(f"summary: expected a string, got {type(result).__name__}")
        return result
    if kind in ("embedding", "textboxes"):
        if not isinstance(result, list) or (n_frames is not None and len(result) != n_frames):
            raise ProviderMalformedResponse(f"{kind}: expected one entry per frame ({n_frames})")
        if kind == "embedding":
            out = []
            for vec in result:
                arr = np.asarray(vec, dtype=np.float64)
                if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
                    raise ProviderMalformedResponse("embedding: malformed vector")
                if abs(float(np.linalg.norm(arr)) - 1.0) > 1e-6:
                    raise ProviderMalformedResponse("embedding: vector is not unit-norm")
                out.append(arr)
            return out
        out = []
        for boxes in result:
            if not isinstance(boxes, list):
                raise ProviderMalformedResponse("textboxes: expected a list per frame")
            frame_boxes = []
            for b in boxes:
                if isinstance(b, Mapping):
                    b = [b.get("x0"), b.get("y0"), b.get("x1"), b.get("y1")]
                if not (isinstance(b, (list, tuple)) and len(b) == 4 and all(isinstance(c, int) for c in b)):
                    raise ProviderMalformedResponse(f"textboxes: malformed box {b!r}")
                frame_boxes.append(list(b))
            out.append(frame_boxes)
        return out
    raise ValueError(f"unknown provider kind {kind!r}")


# -- wire encoding -------------------------------------------------------------

def encode_png(rgb: np.ndarray) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(rgb), "RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png(data: str) -> np.ndarray:
    from PIL import Image

    img = Image.open(io.BytesIO(base64.b64decode(data))).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def build_request(kind: str, clip_id: str, frames: Sequence[Frame], payload: Mapping | None = None) -> dict:
    return {
        "clip_id": clip_id,
        "kind": kind,
        "frames": [{"index": f.index, "png_base64": encode_png(f.rgb)} for f in frames],
        "payload": dict(payload or {}),
    }


@dataclass
class Endpoint:
    url: str
    timeout_ms: int = 30000
    max_retries: int = 3
    max_inflight: int = 4
    backoff_ms: int = 200


class HTTPProvider:
    """Blocking HTTP client for one provider endpoint.

    ``max_retries`` is the total number of attempts. Timeouts, connection
    errors, 429 and 5xx responses are retried with exponential backoff;
    other 4xx responses fail immediately. Concurrent callers are capped at
    ``max_inflight`` requests.
    """

    def __init__(self, endpoint: Endpoint, sleep: Callable[[float], None] = time.sleep):
        self.endpoint = endpoint
        self._slots = threading.BoundedSemaphore(endpoint.max_inflight)
        self._sleep = sleep

    def _post(self, body: bytes):
        req = urllib.request.Request(
            self.endpoint.url, data=body, method="POST",
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(req, timeout=self.endpoint.timeout_ms / 1000) as resp:
            return resp.read()

    def request(self, kind, clip_id, frames, payload=None):
        body = json.dumps(build_request(kind, clip_id, frames, payload)).encode("utf-8")
        attempts = max(1, self.endpoint.max_retries)
        last_err = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(self.endpoint.backoff_ms / 1000 * 2 ** (attempt - 1))
            try:
                with self._slots:
                    raw = self._post(body)
                break
            except urllib.error.HTTPError as e:
                last_err = e
                if e.code != 429 and e.code < 500:
                    raise ProviderUnavailable(f"{kind} provider rejected request: HTTP {e.code}") from e
            except (urllib.error.URLError, TimeoutError, ConnectionError, OSError) as e:
                last_err = e
            log.debug("%s provider attempt %d/%d failed: %s", kind, attempt + 1, attempts, last_err)
        else:
            raise ProviderUnavailable(f"{kind} provider failed after {attempts} attempts: {last_err}")
        try:
            reply = json.loads(raw)
        except ValueError as e:
            raise ProviderMalformedResponse(f"{kind}: reply is not JSON") from e
        if not isinstance(reply, dict) or reply.get("clip_id") != clip_id or reply.get("kind") != kind:
            raise ProviderMalformedResponse(f"{kind}: reply envelope does not match request")
        if "result" not in reply:
            raise ProviderMalformedResponse(f"{kind}: reply has no result")
        return validate_result(kind, reply["result"], len(frames))


class MockProvider:
    """In-process provider backed by per-kind handler callables.

    Each handler is called as ``handler(clip_id, frames, payload)``; the
    return value is validated exactly like an HTTP reply. Handlers may also
    raise :class:`ProviderUnavailable` to simulate outages.
    """

    def __init__(self, handlers: Mapping[str, Callable]):
        self.handlers = dict(handlers)
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def request(self, kind, clip_id, frames, payload=None):
        handler = self.handlers.get(kind)
        if handler is None:
            raise ProviderUnavailable(f"mock has no handler for {kind!r}")
        with self._lock:
            self.calls.append((kind, clip_id))
        return validate_result(kind, handler(clip_id, list(frames), dict(payload or {})), len(frames))


class ProviderSet:
    """Kind -> provider routing. Missing kinds raise ProviderUnavailable."""

    def __init__(self, providers: Mapping[str, Provider] | None = None):
        self._providers = dict(providers or {})

    def __contains__(self, kind):
        return kind in self._providers

    def get(self, kind: str) -> Provider:
        try:
            return self._providers[kind]
        except KeyError:
            raise ProviderUnavailable(f"no provider configured for {kind!r}") from None

    def request(self, kind, clip_id, frames, payload=None):
        return self.get(kind).request(kind, clip_id, frames, payload)

    @classmethod
    def from_endpoints(cls, endpoints: Mapping[str, Endpoint]) -> "ProviderSet":
        return cls({kind: HTTPProvider(ep) for kind, ep in endpoints.items()})


# -- deterministic mocks ---------------------------------------------------------

def grid_color_embedding(rgb: np.ndarray, grid: int = 4) -> list[float]:
    """Unit-norm vector of mean colours over a ``grid x grid`` tiling."""
    h, w = rgb.shape[:2]
    feats = []
    for gy in range(grid):
        for gx in range(grid):
            tile = rgb[gy * h // grid:(gy + 1) * h // grid, gx * w // grid:(gx + 1) * w // grid]
            m = tile.reshape(-1, 3).mean(axis=0) if tile.size else np.zeros(3)
            feats.extend((m - 128.0) / 128.0)
    v = np.asarray(feats)
    norm = np.linalg.norm(v)
    return (v / norm if norm > 0 else np.eye(v.size)[0]).tolist()


def _mock_caption(clip_id, frames, payload):
    mean = np.mean([f.rgb.reshape(-1, 3).mean(axis=0) for f in frames], axis=0) if frames else np.zeros(3)
    tone = "bright" if mean.mean() > 128 else "dim"
    hue = ("red", "green", "blue")[int(np.argmax(mean))]
    return {
        "brief": f"A {tone} {hue} toned scene from clip {clip_id}.",
        "detailed": f"The clip {clip_id} shows a slowly drifting {hue} texture with {tone} tones "
                    f"across {len(frames)} sampled frames.",
        "background": f"A smooth {hue} gradient fills the background.",
        "theme": "Abstract synthetic footage.",
        "style": "Minimalist procedural texture.",
        "shot_type": "Wide shot.",
        "camera_movement": "Slow horizontal pan.",
        "lighting": f"Even {tone} lighting without visible sources.",
        "atmosphere": "Calm and steady.",
    }


def _mock_summary(clip_id, frames, payload):
    caption = payload.get("caption", {})
    return " ".join(caption[name] for name in CAPTION_FIELDS if caption.get(name))


def default_mock_handlers(
    vtss: float = 0.05,
    similarity: float = 0.3,
    attributes: Mapping[str, bool] | None = None,
    textboxes: Callable[[str, int], list] | None = None,
) -> dict[str, Callable]:
    """Deterministic handlers for every kind except ``flow``.

    ``textboxes(source_id, frame_index)`` supplies OCR boxes; by default no
    text is ever found.
    """
    attrs = {name: False for name in ATTRIBUTES}
    attrs.update(attributes or {})

    def boxes(clip_id, frames, payload):
        source = payload.get("source_id", clip_id)
        if textboxes is None:
            return [[] for _ in frames]
        return [[list(b) for b in textboxes(source, f.index)] for f in frames]

    return {
        "vtss": lambda c, f, p: vtss,
        "similarity": lambda c, f, p: similarity,
        "attributes": lambda c, f, p: dict(attrs),
        "embedding": lambda c, f, p: [grid_color_embedding(fr.rgb) for fr in f],
        "textboxes": boxes,
        "caption": _mock_caption,
        "summary": _mock_summary,
    }


def mock_provider_set(**kwargs) -> ProviderSet:
    mock = MockProvider(default_mock_handlers(**kwargs))
    return ProviderSet({kind: mock for kind in mock.handlers})


# -- mock HTTP server (tests, local smoke runs) -------------------------------------

class MockProviderServer:
    """Serve :class:`MockProvider` handlers over the wire protocol.

    ``fail_first`` makes the first N requests answer ``fail_status``
    (default 503); ``delay_s`` stalls every reply (to exercise client
    timeouts).

    >>> with MockProviderServer(default_mock_handlers()) as srv:   # doctest: +SKIP
    ...     HTTPProvider(Endpoint(srv.url)).request("vtss", "c0", [])
    0.05
    """

    def __init__(self, handlers: Mapping[str, Callable], fail_first: int = 0, delay_s: float = 0.0,
                 raw_result: Callable[[dict], object] | None = None, fail_status: int = 503):
        self.handlers = dict(handlers)
        self.fail_first = fail_first
        self.fail_status = fail_status
        self.delay_s = delay_s
        self.raw_result = raw_result
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with outer._lock:
                    outer.requests.append(body)
                    failing = len(outer.requests) <= outer.fail_first
                if outer.delay_s:
                    time.sleep(outer.delay_s)
                if failing:
                    self.send_response(outer.fail_status)
                    self.end_headers()
                    return
                frames = [Frame(fr["index"], decode_png(fr["png_base64"])) for fr in body["frames"]]
                kind = body["kind"]
                if outer.raw_result is not None:
                    result = outer.raw_result(body)
                else:
                    result = outer.handlers[kind](body["clip_id"], frames, body.get("payload", {}))
                    if kind == "embedding":
                        result = [list(map(float, v)) for v in result]
                data = json.dumps({"clip_id": body["clip_id"], "kind": kind, "result": result}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                try:
                    self.wfile.write(data)
                except (BrokenPipeError, ConnectionResetError):
                    pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
