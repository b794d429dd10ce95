"""Conformance against the golden frame corpus shipped with the client toolkit."""

import io
import json
import os

import numpy as np
import pytest

from sam_bridge.fake_model import FakeModel
from sam_bridge.server import Session
from sam_bridge.wire import decode_mask, read_frame

CORPUS = os.path.join(os.path.dirname(__file__), "..", "..", "protocol_corpus")


def _run_frames(raw: bytes) -> list[dict]:
    out = io.BytesIO()
    Session(FakeModel(), io.BytesIO(raw), out).serve()
    out.seek(0)
    responses = []
    while True:
        resp = read_frame(out)
        if resp is None:
            return responses
        responses.append(resp)


def _corpus():
    with open(os.path.join(CORPUS, "expectations.json")) as fh:
        spec = json.load(fh)
    return spec["frames"]


@pytest.mark.parametrize("entry", _corpus(), ids=lambda e: e["name"])
def test_corpus_frame(entry):
    with open(os.path.join(CORPUS, entry["request_file"]), "rb") as fh:
        raw = fh.read()
    responses = _run_frames(raw)
    assert len(responses) == 1
    resp = responses[0]
    expect = entry["expect"]
    assert resp["id"] == entry["request_id"]
    assert resp.get("ok") is expect["ok"]
    for key in expect.get("require", []):
        assert key in resp, key
    if "version" in expect:
        assert resp["version"] == expect["version"]
    if "descriptor_keys" in expect:
        for key in expect["descriptor_keys"]:
            assert key in resp["descriptor"]
        assert resp["descriptor"]["name"]
    if "min_masks" in expect:
        assert len(resp["masks"]) >= expect["min_masks"]
        for m in resp["masks"]:
            for key in expect.get("mask_keys", []):
                assert key in m
    if expect.get("threshold_contract"):
        h, w = expect["image_shape"]
        for m in resp["masks"]:
            field = np.frombuffer(
                __import__("base64").b64decode(m["field_b64"]), dtype="<f4"
            ).reshape(h, w)
            mask = decode_mask(m["mask_b64"], h, w)
            assert np.array_equal(field > 0.5, mask)
    if "grad_shape" in expect:
        grad = np.frombuffer(
            __import__("base64").b64decode(resp["grad_b64"]), dtype="<f4")
        assert grad.size == int(np.prod(expect["grad_shape"]))
        if expect.get("finite"):
            assert np.isfinite(grad).all()
            assert np.isfinite(resp["loss"])


def test_corpus_replayed_in_one_session():
    blobs = []
    for entry in _corpus():
        with open(os.path.join(CORPUS, entry["request_file"]), "rb") as fh:
            blobs.append(fh.read())
    responses = _run_frames(b"".join(blobs))
    assert [r["id"] for r in responses] == [e["request_id"] for e in _corpus()]


def test_byte_equal_requests_get_byte_equal_responses():
    with open(os.path.join(CORPUS, "02_predict.req.bin"), "rb") as fh:
        raw = fh.read()
    a = io.BytesIO()
    Session(FakeModel(), io.BytesIO(raw), a).serve()
    b = io.BytesIO()
    Session(FakeModel(), io.BytesIO(raw), b).serve()
    assert a.getvalue() == b.getvalue()
