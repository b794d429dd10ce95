"""Client backing the segmenter contract with an out-of-process model."""

from __future__ import annotations

import shlex
import socket
import subprocess
import threading

import numpy as np

from ..core.types import BinaryMask, ImageTensor, PointPrompt
from ..errors import (
    ModelError,
    NonFiniteGradientError,
    ProtocolError,
    RemoteError,
    RemoteTimeoutError,
)
from ..losses import LossSpec, PredictionField
from .contract import MaskPrediction, SegmenterContract, SegmenterDescriptor, validate_predictions
from .wire import (
    DEFAULT_MAX_FRAME,
    PROTOCOL_VERSION,
    decode_f32_b64,
    decode_mask_b64,
    encode_f32_b64,
    encode_mask_b64,
    read_frame,
    write_frame,
)


class RemoteSegmenter(SegmenterContract):
    """Serializes one request at a time over a byte-stream connection."""

    def __init__(self, reader, writer, *, max_frame: int = DEFAULT_MAX_FRAME,
                 on_close=None):
        self._reader = reader
        self._writer = writer
        self._max_frame = max_frame
        self._on_close = on_close
        self._lock = threading.Lock()
        self._next_id = 0
        self._descriptor = self._handshake()

    # -- plumbing ----------------------------------------------------------

    def _request(self, obj: dict) -> dict:
        with self._lock:
            self._next_id += 1
            obj = dict(obj, id=self._next_id)
            try:
                write_frame(self._writer, obj, self._max_frame)
                resp = read_frame(self._reader, self._max_frame)
            except socket.timeout as e:
                self.close()
                raise RemoteTimeoutError("remote model did not answer in time") from e
            except ProtocolError:
                self.close()
                raise
        if resp.get("id") != obj["id"]:
            self.close()
            raise ProtocolError(f"response id {resp.get('id')} != request id {obj['id']}")
        if not resp.get("ok", False):
            raise RemoteError(str(resp.get("error", "unspecified remote failure")))
        return resp

    def _handshake(self) -> SegmenterDescriptor:
        resp = self._request({
            "op": "handshake",
            "version": PROTOCOL_VERSION,
            "max_frame_bytes": self._max_frame,
        })
        if resp.get("version") != PROTOCOL_VERSION:
            self.close()
            raise ProtocolError(
                f"protocol version mismatch: server has {resp.get('version')}, "
                f"client needs {PROTOCOL_VERSION}"
            )
        remote_max = resp.get("max_frame_bytes")
        if isinstance(remote_max, int) and remote_max > 0:
            self._max_frame = min(self._max_frame, remote_max)
        desc = resp.get("descriptor")
        if not isinstance(desc, dict) or not desc.get("name"):
            raise ProtocolError("handshake response lacks a descriptor")
        return SegmenterDescriptor(
            name=str(desc["name"]),
            multimask=bool(desc.get("multimask", False)),
            concurrent_safe=bool(desc.get("concurrent_safe", False)),
        )

    def descriptor(self) -> SegmenterDescriptor:
        return self._descriptor

    def close(self) -> None:
        if self._on_close is not None:
            cb, self._on_close = self._on_close, None
            try:
                cb()
            except OSError:
                pass

    def shutdown(self) -> None:
        """Ask the server to exit, then drop the connection."""
        try:
            with self._lock:
                self._next_id += 1
                write_frame(self._writer, {"op": "shutdown", "id": self._next_id},
                            self._max_frame)
        except (ProtocolError, OSError):
            pass
        self.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- contract ----------------------------------------------------------

    @staticmethod
    def _image_payload(image: ImageTensor, prompt: PointPrompt) -> dict:
        prompt.check_within(image.height, image.width)
        return {
            "image": {
                "h": image.height,
                "w": image.width,
                "data_b64": encode_f32_b64(image.data),
            },
            "prompt": {"type": "point", "x": prompt.x, "y": prompt.y},
        }

    def predict(self, image: ImageTensor, prompt: PointPrompt) -> list[MaskPrediction]:
        resp = self._request({"op": "predict", **self._image_payload(image, prompt)})
        masks = resp.get("masks")
        if not isinstance(masks, list) or not masks:
            raise ProtocolError("predict response lacks masks")
        shape = (image.height, image.width)
        preds = []
        for m in masks:
            mask = decode_mask_b64(m["mask_b64"], shape)
            field = decode_f32_b64(m["field_b64"], shape)
            field = np.clip(field, 0.0, 1.0)
            preds.append(MaskPrediction(
                mask=BinaryMask(mask),
                field=PredictionField(field),
                score=float(m["score"]),
            ))
        validate_predictions(preds, image)
        return preds

    def input_gradient(
        self,
        image: ImageTensor,
        prompt: PointPrompt,
        truth: BinaryMask,
        loss: LossSpec,
        segpgd_step: tuple[int, int] | None = None,
        mask_index: int | None = None,
    ) -> tuple[float, np.ndarray]:
        req = {
            "op": "grad",
            **self._image_payload(image, prompt),
            "truth_b64": encode_mask_b64(truth.data),
            "loss": loss.to_json_obj(),
            "segpgd": None if segpgd_step is None else
                      {"t": segpgd_step[0], "T": segpgd_step[1]},
        }
        if mask_index is not None:
            req["mask_index"] = mask_index
        resp = self._request(req)
        if "loss" not in resp or "grad_b64" not in resp:
            raise ProtocolError("grad response lacks loss/grad fields")
        grad = decode_f32_b64(resp["grad_b64"], (image.height, image.width, 3))
        loss_value = float(resp["loss"])
        if not np.isfinite(grad).all() or not np.isfinite(loss_value):
            raise NonFiniteGradientError("remote model returned non-finite gradient")
        return loss_value, grad


def connect_tcp(host: str, port: int, *, timeout: float | None = 60.0,
                max_frame: int = DEFAULT_MAX_FRAME) -> RemoteSegmenter:
    sock = socket.create_connection((host, port), timeout=timeout)
    sock.settimeout(timeout)
    reader = sock.makefile("rb")
    writer = sock.makefile("wb")

    def _close():
        reader.close()
        writer.close()
        sock.close()

    return RemoteSegmenter(reader, writer, max_frame=max_frame, on_close=_close)


def spawn_stdio(command: str | list[str], *, max_frame: int = DEFAULT_MAX_FRAME) -> RemoteSegmenter:
    """Launch a model server subprocess speaking the protocol on its stdio."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)

    def _close():
        if proc.stdin:
            proc.stdin.close()
        if proc.stdout:
            proc.stdout.close()
        proc.terminate()
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    try:
        return RemoteSegmenter(proc.stdout, proc.stdin, max_frame=max_frame, on_close=_close)
    except Exception:
        _close()
        raise


def build_model(selector: str) -> SegmenterContract:
    """Resolve 'toy' | 'tcp:HOST:PORT' | 'cmd:SHELL_COMMAND' into a segmenter."""
    if selector == "toy":
        from .toy import ToyBlobNet
        return ToyBlobNet()
    if selector.startswith("tcp:"):
        rest = selector[4:]
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ModelError(f"bad tcp selector {selector!r}, expected tcp:HOST:PORT")
        try:
            return connect_tcp(host, int(port))
        except OSError as e:
            raise ModelError(f"cannot connect to model at {selector}: {e}") from e
    if selector.startswith("cmd:"):
        try:
            return spawn_stdio(selector[4:])
        except OSError as e:
            raise ModelError(f"cannot launch model command {selector!r}: {e}") from e
    raise ModelError(f"unknown model selector {selector!r}")
