"""PNG I/O boundaries: 8-bit at rest, [0,1] float64 in memory."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from ..errors import MissingFileError
from .types import BinaryMask, ImageTensor


def quantize_unit_to_u8(values: np.ndarray) -> np.ndarray:
    """[0,1] floats to uint8 with round-half-away-from-zero (values >= 0 here,
    so floor(x*255 + 0.5) realizes it)."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def save_image_png(image: ImageTensor, path: str | os.PathLike) -> None:
    Image.fromarray(quantize_unit_to_u8(image.data), mode="RGB").save(path, format="PNG")


def load_image_png(path: str | os.PathLike) -> ImageTensor:
    if not os.path.isfile(path):
        raise MissingFileError(f"image file not found: {path}")
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return ImageTensor(arr)


def save_mask_png(mask: BinaryMask, path: str | os.PathLike) -> None:
    """Masks are emitted strictly as {0, 255} 8-bit gray."""
    Image.fromarray(np.where(mask.data, 255, 0).astype(np.uint8), mode="L").save(
        path, format="PNG"
    )


def load_mask_png(path: str | os.PathLike) -> BinaryMask:
    """Any nonzero gray value counts as set."""
    if not os.path.isfile(path):
        raise MissingFileError(f"mask file not found: {path}")
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return BinaryMask(arr != 0)
