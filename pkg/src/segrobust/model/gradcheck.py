"""Finite-difference verification of a segmenter's input_gradient."""

from __future__ import annotations

import numpy as np

from ..core.rng import DeterministicRng
from ..core.types import BinaryMask, ImageTensor, PointPrompt
from ..losses import LossSpec
from .contract import SegmenterContract


def relative_gradient_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - f| normalized by the larger gradient's sup norm (floored)."""
    scale = max(float(np.abs(analytic).max(initial=0.0)),
                float(np.abs(numeric).max(initial=0.0)), 1e-12)
    return float(np.abs(analytic - numeric).max()) / scale


def gradient_check(
    model: SegmenterContract,
    image: ImageTensor,
    prompt: PointPrompt,
    truth: BinaryMask,
    loss: LossSpec,
    h: float = 1e-4,
    coords: int = 64,
    seed: int = 0,
    segpgd_step: tuple[int, int] | None = None,
) -> float:
    """Central differences on a seeded random coordinate subset.

    Pixels must sit at least h inside [0,1] so the probes stay valid images;
    callers control the fixture. Returns the relative error defined above,
    restricted to the sampled coordinates.
    """
    _, grad = model.input_gradient(image, prompt, truth, loss, segpgd_step)
    rng = DeterministicRng(seed)
    flat = image.data.reshape(-1)
    n = flat.size
    picked = sorted({rng.next_below(n) for _ in range(coords)})
    analytic = grad.reshape(-1)[picked]
    numeric = np.empty(len(picked))
    for k, idx in enumerate(picked):
        # probes snap to the float32 grid so remote backends (whose wire format
        # is float32) evaluate exactly these values; divide by the realized step
        hi = float(np.float32(flat[idx] + h))
        lo = float(np.float32(flat[idx] - h))
        vals = {}
        for key, coord in (("hi", hi), ("lo", lo)):
            probe = flat.copy()
            probe[idx] = coord
            vals[key], _ = model.input_gradient(
                ImageTensor(probe.reshape(image.data.shape)), prompt, truth, loss,
                segpgd_step,
            )
        numeric[k] = (vals["hi"] - vals["lo"]) / (hi - lo)
    return relative_gradient_error(analytic, numeric)
