"""Protocol session loop and the TCP/stdio servers around it."""

from __future__ import annotations

import logging
import socket
import socketserver
import sys

import numpy as np

from .wire import (
    DEFAULT_MAX_FRAME,
    PROTOCOL_VERSION,
    FramingError,
    decode_image,
    decode_mask,
    encode_f32,
    encode_mask,
    read_frame,
    write_frame,
)

log = logging.getLogger("sam_bridge")


class Session:
    """One connection: answers requests in arrival order until shutdown/EOF.

    Model faults become ok:false responses; framing faults close the
    connection. The process itself never dies on bad input.
    """

    def __init__(self, model, reader, writer, max_frame: int = DEFAULT_MAX_FRAME):
        self.model = model
        self.reader = reader
        self.writer = writer
        self.max_frame = max_frame

    def serve(self) -> None:
        while True:
            try:
                req = read_frame(self.reader, self.max_frame)
            except FramingError as e:
                log.warning("closing connection on framing fault: %s", e)
                return
            if req is None:
                return
            op = req.get("op")
            if op == "shutdown":
                return
            rid = req.get("id")
            try:
                resp = self._dispatch(op, req)
            except Exception as e:  # every model/request fault is reported in-band
                resp = {"ok": False, "error": f"{type(e).__name__}: {e}"}
            resp["id"] = rid
            try:
                write_frame(self.writer, resp, self.max_frame)
            except (FramingError, OSError) as e:
                log.warning("closing connection on write fault: %s", e)
                return

    def _dispatch(self, op, req) -> dict:
        if op == "handshake":
            return self._handshake(req)
        if op == "predict":
            return self._predict(req)
        if op == "grad":
            return self._grad(req)
        return {"ok": False, "error": f"unknown op {op!r}"}

    def _handshake(self, req) -> dict:
        version = req.get("version")
        if version != PROTOCOL_VERSION:
            return {"ok": False, "error": f"protocol version {version} unsupported, "
                                          f"server speaks {PROTOCOL_VERSION}"}
        client_max = req.get("max_frame_bytes")
        if isinstance(client_max, int) and client_max > 0:
            self.max_frame = min(self.max_frame, client_max)
        return {
            "ok": True,
            "version": PROTOCOL_VERSION,
            "max_frame_bytes": self.max_frame,
            "descriptor": {
                "name": self.model.name,
                "multimask": self.model.multimask,
                "concurrent_safe": self.model.concurrent_safe,
            },
        }

    @staticmethod
    def _decode_request_image(req):
        image = np.clip(decode_image(req["image"]), 0.0, 1.0)
        prompt = req["prompt"]
        if prompt.get("type") != "point":
            raise ValueError(f"unsupported prompt type {prompt.get('type')!r}")
        x, y = int(prompt["x"]), int(prompt["y"])
        h, w = image.shape[:2]
        if not (0 <= x < w and 0 <= y < h):
            raise ValueError(f"point ({x},{y}) outside {h}x{w} image")
        return image, x, y

    def _predict(self, req) -> dict:
        image, x, y = self._decode_request_image(req)
        masks = []
        for mask, field, score in self.model.predict(image, x, y):
            if not np.array_equal(field > 0.5, mask):
                raise AssertionError("model violated the threshold contract")
            masks.append({
                "mask_b64": encode_mask(mask),
                "field_b64": encode_f32(field),
                "score": float(score),
            })
        return {"ok": True, "masks": masks}

    def _grad(self, req) -> dict:
        image, x, y = self._decode_request_image(req)
        h, w = image.shape[:2]
        truth = decode_mask(req["truth_b64"], h, w)
        seg = req.get("segpgd")
        segpgd = (int(seg["t"]), int(seg["T"])) if seg else None
        mask_index = req.get("mask_index")
        value, grad = self.model.input_gradient(
            image, x, y, truth, req["loss"], segpgd, mask_index)
        if not np.isfinite(grad).all() or not np.isfinite(value):
            raise ValueError("model produced a non-finite gradient")
        return {"ok": True, "loss": float(value), "grad_b64": encode_f32(grad)}


def serve_stdio(model, max_frame: int = DEFAULT_MAX_FRAME) -> None:
    Session(model, sys.stdin.buffer, sys.stdout.buffer, max_frame).serve()


def serve_tcp(model, port: int, max_frame: int = DEFAULT_MAX_FRAME,
              ready_callback=None) -> None:
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            Session(model, self.rfile, self.wfile, max_frame).serve()

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    with Server(("127.0.0.1", port), Handler) as server:
        if ready_callback is not None:
            ready_callback(server.server_address[1])
        log.info("listening on tcp:%d", server.server_address[1])
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
