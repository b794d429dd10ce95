"""The promptable-segmenter capability every backend implements."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..core.types import BinaryMask, ImageTensor, PointPrompt
from ..errors import ModelError
from ..losses import LossSpec, PredictionField


@dataclass(frozen=True)
class MaskPrediction:
    mask: BinaryMask
    field: PredictionField
    score: float


@dataclass(frozen=True)
class SegmenterDescriptor:
    name: str
    multimask: bool
    concurrent_safe: bool

    def to_json_obj(self) -> dict:
        return {"name": self.name, "multimask": self.multimask,
                "concurrent_safe": self.concurrent_safe}


class SegmenterContract(ABC):
    """Point-promptable segmenter with input-gradient capability.

    predict returns at least one mask whose 0.5-thresholded field equals the
    mask bit for bit; input_gradient returns the requested loss and its exact
    gradient with respect to the image (same H x W x 3 shape).
    """

    @abstractmethod
    def predict(self, image: ImageTensor, prompt: PointPrompt) -> list[MaskPrediction]:
        ...

    @abstractmethod
    def input_gradient(
        self,
        image: ImageTensor,
        prompt: PointPrompt,
        truth: BinaryMask,
        loss: LossSpec,
        segpgd_step: tuple[int, int] | None = None,
        mask_index: int | None = None,
    ) -> tuple[float, np.ndarray]:
        ...

    @abstractmethod
    def descriptor(self) -> SegmenterDescriptor:
        ...


def validate_predictions(preds: list[MaskPrediction], image: ImageTensor) -> None:
    """Contract invariants checked on every predict result."""
    if len(preds) < 1:
        raise ModelError("segmenter returned zero masks")
    shape = (image.height, image.width)
    for i, p in enumerate(preds):
        if (p.mask.height, p.mask.width) != shape or p.field.probs.shape != shape:
            raise ModelError(f"prediction {i} shape mismatch against image {shape}")
        if not np.array_equal(p.field.probs > 0.5, p.mask.data):
            raise ModelError(f"prediction {i}: thresholded field differs from mask")


def select_mask_index(preds: list[MaskPrediction]) -> int:
    """Attack target selection: highest score, ties to the lowest index."""
    return max(range(len(preds)), key=lambda i: (preds[i].score, -i))
