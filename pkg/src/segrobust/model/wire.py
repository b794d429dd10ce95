"""Frame and payload codecs for the out-of-process model protocol.

A frame is a 4-byte big-endian length followed by that many bytes of UTF-8
JSON. Images and gradients travel as base64 little-endian float32 row-major;
masks as base64 MSB-first bit-packed row-major. docs/protocol.md is the
protocol's single source of truth, shared with the bridge server.
"""

from __future__ import annotations

import base64
import json
import struct

import numpy as np

from ..errors import ProtocolError

PROTOCOL_VERSION = 1
DEFAULT_MAX_FRAME = 64 * 1024 * 1024
_LEN = struct.Struct(">I")


def write_frame(stream, obj: dict, max_bytes: int = DEFAULT_MAX_FRAME) -> None:
    body = json.dumps(obj, sort_keys=True).encode("utf-8")
    if len(body) > max_bytes:
        raise ProtocolError(f"outbound frame of {len(body)} bytes exceeds limit {max_bytes}")
    stream.write(_LEN.pack(len(body)) + body)
    stream.flush()


def read_frame(stream, max_bytes: int = DEFAULT_MAX_FRAME) -> dict:
    header = _read_exact(stream, 4, eof_ok=False)
    (length,) = _LEN.unpack(header)
    if length > max_bytes:
        raise ProtocolError(f"inbound frame of {length} bytes exceeds limit {max_bytes}")
    body = _read_exact(stream, length, eof_ok=False)
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"frame body is not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ProtocolError("frame body must be a JSON object")
    return obj


def _read_exact(stream, n: int, eof_ok: bool) -> bytes:
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = stream.read(remaining)
        if not chunk:
            raise ProtocolError(f"stream closed mid-frame ({n - remaining}/{n} bytes read)")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def encode_f32_b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def decode_f32_b64(data: str, shape: tuple[int, ...]) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as e:
        raise ProtocolError(f"bad base64 payload: {e}") from e
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise ProtocolError(f"float payload is {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)


def encode_mask_b64(mask: np.ndarray) -> str:
    packed = np.packbits(np.ascontiguousarray(mask, dtype=bool).reshape(-1))
    return base64.b64encode(packed.tobytes()).decode("ascii")


def decode_mask_b64(data: str, shape: tuple[int, int]) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as e:
        raise ProtocolError(f"bad base64 payload: {e}") from e
    n = shape[0] * shape[1]
    if len(raw) != (n + 7) // 8:
        raise ProtocolError(f"mask payload is {len(raw)} bytes, expected {(n + 7) // 8}")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=n)
    return bits.astype(bool).reshape(shape)
