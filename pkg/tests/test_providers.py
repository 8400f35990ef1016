import threading
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from uvcurate.errors import ProviderMalformedResponse, ProviderUnavailable
from uvcurate.frame_io import Frame
from uvcurate.providers import (
    ATTRIBUTES, Endpoint, HTTPProvider, MockProviderServer, ProviderSet, build_request, decode_png,
    default_mock_handlers, encode_png, grid_color_embedding, validate_result,
)


def frames(n=2):
    g = np.random.default_rng(0)
    return [Frame(i, g.integers(0, 256, (8, 10, 3), dtype=np.uint8)) for i in range(n)]


def test_png_round_trip():
    f = frames(1)[0]
    assert np.array_equal(decode_png(encode_png(f.rgb)), f.rgb)


def test_request_envelope():
    req = build_request("vtss", "c9", frames(2), {"a": 1})
    assert set(req) == {"clip_id", "kind", "frames", "payload"}
    assert [fr["index"] for fr in req["frames"]] == [0, 1]
    assert set(req["frames"][0]) == {"index", "png_base64"}


@pytest.mark.parametrize("kind, result", [
    ("vtss", "0.3"), ("vtss", True), ("similarity", 1.5), ("flow", -1.0),
    ("attributes", {a: False for a in ATTRIBUTES[:15]}),
    ("attributes", {**{a: False for a in ATTRIBUTES}, "Extra": False}),
    ("attributes", {**{a: False for a in ATTRIBUTES}, "Other": 0}),
    ("caption", {"brief": "x"}), ("summary", 3),
    ("embedding", [[1.0, 0.0]]), ("embedding", [[2.0, 0.0], [1.0, 0.0]]),
    ("textboxes", [[[0, 0, 1]], []]),
])
def test_validate_rejects(kind, result):
    with pytest.raises(ProviderMalformedResponse):
        validate_result(kind, result, n_frames=2)


def test_validate_normalises_boxes_and_embeddings():
    assert validate_result("textboxes", [[{"x0": 0, "y0": 1, "x1": 2, "y1": 3}], []], 2) == [[[0, 1, 2, 3]], []]
    emb = validate_result("embedding", [[0.6, 0.8]], 1)
    assert emb[0].tolist() == [0.6, 0.8]


def test_grid_embedding_is_unit_norm():
    v = grid_color_embedding(frames(1)[0].rgb)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    flat = grid_color_embedding(np.full((8, 8, 3), 128, np.uint8))
    assert abs(np.linalg.norm(flat) - 1.0) < 1e-12


def test_http_success_and_payload():
    with MockProviderServer(default_mock_handlers(vtss=0.25)) as srv:
        p = HTTPProvider(Endpoint(srv.url))
        assert p.request("vtss", "c1", frames(2), {"source_id": "s"}) == 0.25
        body = srv.requests[0]
        assert body["kind"] == "vtss" and body["payload"] == {"source_id": "s"}
        assert len(body["frames"]) == 2


def test_http_embedding_round_trip():
    with MockProviderServer(default_mock_handlers()) as srv:
        out = HTTPProvider(Endpoint(srv.url)).request("embedding", "c1", frames(3))
        assert len(out) == 3


def test_http_retries_then_succeeds():
    waits = []
    with MockProviderServer(default_mock_handlers(), fail_first=2) as srv:
        p = HTTPProvider(Endpoint(srv.url, max_retries=3, backoff_ms=100), sleep=waits.append)
        assert p.request("vtss", "c1", []) == 0.05
        assert len(srv.requests) == 3
    assert waits == [0.1, 0.2]


def test_http_gives_up_after_max_retries():
    with MockProviderServer(default_mock_handlers(), fail_first=3) as srv:
        p = HTTPProvider(Endpoint(srv.url, max_retries=3), sleep=lambda s: None)
        with pytest.raises(ProviderUnavailable):
            p.request("vtss", "c1", [])
        assert len(srv.requests) == 3


def test_http_client_error_is_not_retried():
    with MockProviderServer(default_mock_handlers(), fail_first=1, fail_status=400) as srv:
        p = HTTPProvider(Endpoint(srv.url, max_retries=3), sleep=lambda s: None)
        with pytest.raises(ProviderUnavailable):
            p.request("vtss", "c1", [])
        assert len(srv.requests) == 1


def test_http_timeouts_exhaust_retries():
    with MockProviderServer(default_mock_handlers(), delay_s=0.3) as srv:
        p = HTTPProvider(Endpoint(srv.url, timeout_ms=50, max_retries=3), sleep=lambda s: None)
        with pytest.raises(ProviderUnavailable):
            p.request("vtss", "c1", [])


def test_http_malformed_result():
    attrs = {a: False for a in ATTRIBUTES[:15]}
    with MockProviderServer(default_mock_handlers(), raw_result=lambda body: attrs) as srv:
        with pytest.raises(ProviderMalformedResponse):
            HTTPProvider(Endpoint(srv.url)).request("attributes", "c1", [])


def test_http_inflight_cap():
    active = peak = 0
    lock = threading.Lock()

    def slow(c, f, p):
        nonlocal active, peak
        with lock:
            active += 1
            peak = max(peak, active)
        time.sleep(0.1)
        with lock:
            active -= 1
        return 0.5

    handlers = dict(default_mock_handlers(), vtss=slow)
    with MockProviderServer(handlers) as srv:
        p = HTTPProvider(Endpoint(srv.url, max_inflight=2))
        with ThreadPoolExecutor(6) as pool:
            assert list(pool.map(lambda i: p.request("vtss", f"c{i}", []), range(6))) == [0.5] * 6
    assert peak == 2


def test_provider_set_routing():
    ps = ProviderSet.from_endpoints({"vtss": Endpoint("http://127.0.0.1:9/")})
    assert "vtss" in ps and "caption" not in ps
    with pytest.raises(ProviderUnavailable):
        ps.request("caption", "c", [])
