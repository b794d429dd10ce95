"""Frame and payload codecs, implemented against docs/protocol.md.

Deliberately independent of the client toolkit: the two sides share only
the protocol document, so this file restates framing and encodings from it.
"""

from __future__ import annotations

import base64
import json
import struct

import numpy as np

PROTOCOL_VERSION = 1
DEFAULT_MAX_FRAME = 64 * 1024 * 1024
_LEN = struct.Struct(">I")


class FramingError(Exception):
    """Unrecoverable stream-level fault; the connection must be closed."""


def write_frame(stream, obj: dict, max_bytes: int = DEFAULT_MAX_FRAME) -> None:
    body = json.dumps(obj, sort_keys=True).encode("utf-8")
    if len(body) > max_bytes:
        raise FramingError(f"outbound frame of {len(body)} bytes exceeds {max_bytes}")
    stream.write(_LEN.pack(len(body)) + body)
    stream.flush()


def read_frame(stream, max_bytes: int = DEFAULT_MAX_FRAME) -> dict | None:
    """One frame, or None at clean end-of-stream."""
    header = stream.read(4)
    if not header:
        return None
    if len(header) < 4:
        raise FramingError("stream ended inside a length prefix")
    (length,) = _LEN.unpack(header)
    if length > max_bytes:
        raise FramingError(f"inbound frame of {length} bytes exceeds {max_bytes}")
    chunks = []
    remaining = length
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            raise FramingError("stream ended inside a frame body")
        chunks.append(chunk)
        remaining -= len(chunk)
    try:
        obj = json.loads(b"".join(chunks).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FramingError(f"frame body is not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise FramingError("frame body must be a JSON object")
    return obj


def decode_image(payload: dict) -> np.ndarray:
    h, w = int(payload["h"]), int(payload["w"])
    raw = base64.b64decode(payload["data_b64"], validate=True)
    if len(raw) != h * w * 3 * 4:
        raise ValueError(f"image payload is {len(raw)} bytes for {h}x{w}")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(h, w, 3)


def decode_mask(data_b64: str, h: int, w: int) -> np.ndarray:
    raw = base64.b64decode(data_b64, validate=True)
    n = h * w
    if len(raw) != (n + 7) // 8:
        raise ValueError(f"mask payload is {len(raw)} bytes for {h}x{w}")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=n).astype(bool).reshape(h, w)


def encode_f32(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def encode_mask(mask: np.ndarray) -> str:
    packed = np.packbits(np.ascontiguousarray(mask, dtype=bool).reshape(-1))
    return base64.b64encode(packed.tobytes()).decode("ascii")
