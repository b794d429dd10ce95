import base64
import io
import json
import socket
import struct
import subprocess
import sys
import threading

import numpy as np

from sam_bridge.fake_model import FakeModel
from sam_bridge.server import Session, serve_tcp
from sam_bridge.wire import encode_f32, read_frame, write_frame


def _frame(obj) -> bytes:
    body = json.dumps(obj, sort_keys=True).encode()
    return struct.pack(">I", len(body)) + body


def _image_payload(h=6, w=6, seed=0):
    rng = np.random.RandomState(seed)
    return {"h": h, "w": w, "data_b64": encode_f32(rng.rand(h, w, 3))}


def _handshake_frame(rid=1):
    return _frame({"id": rid, "op": "handshake", "version": 1,
                   "max_frame_bytes": 1 << 20})


def test_malformed_frame_closes_connection_without_crash():
    raw = b"\x00\x00\x00\x05notjs" + _handshake_frame()
    out = io.BytesIO()
    Session(FakeModel(), io.BytesIO(raw), out).serve()  # must return, not raise
    assert out.getvalue() == b""  # connection dropped before answering anything


def test_oversize_frame_closes_connection():
    huge = struct.pack(">I", 1 << 31) + b"x"
    out = io.BytesIO()
    Session(FakeModel(), io.BytesIO(huge), out, max_frame=1024).serve()
    assert out.getvalue() == b""


def test_version_mismatch_reported_in_band():
    raw = _frame({"id": 9, "op": "handshake", "version": 2})
    out = io.BytesIO()
    Session(FakeModel(), io.BytesIO(raw), out).serve()
    out.seek(0)
    resp = read_frame(out)
    assert resp["ok"] is False and "version" in resp["error"]


def test_model_exception_becomes_ok_false_and_session_survives():
    bad_grad = _frame({"id": 2, "op": "grad", "image": _image_payload(),
                       "prompt": {"type": "point", "x": 1, "y": 1},
                       "truth_b64": base64.b64encode(b"\x00").decode(),
                       "loss": {"kind": "focal_dice"}, "segpgd": None})
    follow_up = _frame({"id": 3, "op": "predict", "image": _image_payload(),
                        "prompt": {"type": "point", "x": 1, "y": 1}})
    out = io.BytesIO()
    Session(FakeModel(), io.BytesIO(_handshake_frame() + bad_grad + follow_up), out).serve()
    out.seek(0)
    first, second, third = read_frame(out), read_frame(out), read_frame(out)
    assert first["ok"] is True
    assert second["ok"] is False and second["error"]
    assert third["ok"] is True and third["masks"]


def test_point_out_of_bounds_is_in_band_error():
    raw = _handshake_frame() + _frame({
        "id": 2, "op": "predict", "image": _image_payload(),
        "prompt": {"type": "point", "x": 99, "y": 0}})
    out = io.BytesIO()
    Session(FakeModel(), io.BytesIO(raw), out).serve()
    out.seek(0)
    read_frame(out)
    resp = read_frame(out)
    assert resp["ok"] is False and "outside" in resp["error"]


def test_tcp_server_answers_multiple_connections():
    ready = threading.Event()
    port_box = {}

    def run():
        serve_tcp(FakeModel(), 0, ready_callback=lambda p: (port_box.update(p=p),
                                                            ready.set()))

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    assert ready.wait(5)
    for _ in range(2):
        with socket.create_connection(("127.0.0.1", port_box["p"]), timeout=5) as sock:
            rfile, wfile = sock.makefile("rb"), sock.makefile("wb")
            write_frame(wfile, {"id": 1, "op": "handshake", "version": 1})
            resp = read_frame(rfile)
            assert resp["ok"] and resp["descriptor"]["name"] == "fake-analytic"
            write_frame(wfile, {"id": 2, "op": "shutdown"})


def test_stdio_subprocess_round_trip():
    proc = subprocess.Popen(
        [sys.executable, "-m", "sam_bridge", "--listen", "stdio", "--fake"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE)
    try:
        proc.stdin.write(_handshake_frame())
        proc.stdin.flush()
        resp = read_frame(proc.stdout)
        assert resp["ok"] is True and resp["version"] == 1
        proc.stdin.write(_frame({"id": 2, "op": "shutdown"}))
        proc.stdin.flush()
        assert proc.wait(timeout=10) == 0
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()
