"""Ground-truth echo segmenter: the oracle test double.

Returns the annotation mask the prompt point falls in, regardless of pixel
content, so any harness run over it must score 1.0 when the plumbing is
sound. Records are identified by (dims, point); if several records share
both, the candidate whose clean image is nearest the presented one wins
(corruptions perturb but do not relocate an image in L1).
"""

from __future__ import annotations

import numpy as np

from ..core.types import AnnotatedImage, BinaryMask, ImageTensor, PointPrompt
from ..errors import ModelError
from ..losses import LossSpec, PredictionField, attack_objective
from .contract import MaskPrediction, SegmenterContract, SegmenterDescriptor


class GtEchoSegmenter(SegmenterContract):
    def __init__(self, records: list[AnnotatedImage]):
        self._records = list(records)

    def descriptor(self) -> SegmenterDescriptor:
        return SegmenterDescriptor(name="gt-echo", multimask=False, concurrent_safe=True)

    def _lookup(self, image: ImageTensor, prompt: PointPrompt) -> BinaryMask:
        shape = (image.height, image.width)
        candidates = []
        for rec in self._records:
            if (rec.image.height, rec.image.width) != shape:
                continue
            for mask in rec.annotations:
                if mask.data[prompt.y, prompt.x]:
                    candidates.append((rec, mask))
                    break
        if not candidates:
            raise ModelError(
                f"echo model has no record with a mask containing ({prompt.x},{prompt.y})"
            )
        if len(candidates) == 1:
            return candidates[0][1]
        # mean-centered distance: additive lifts (snow, fog) must not repaint
        # one record as another
        centered = image.data - image.data.mean()
        dists = [float(np.abs((rec.image.data - rec.image.data.mean()) - centered).sum())
                 for rec, _ in candidates]
        return candidates[int(np.argmin(dists))][1]

    def predict(self, image: ImageTensor, prompt: PointPrompt) -> list[MaskPrediction]:
        prompt.check_within(image.height, image.width)
        mask = self._lookup(image, prompt)
        field = mask.data.astype(np.float64)
        return [MaskPrediction(mask=mask, field=PredictionField(field), score=1.0)]

    def input_gradient(self, image, prompt, truth, loss: LossSpec,
                       segpgd_step=None, mask_index=None):
        field = self._lookup(image, prompt).data.astype(np.float64)
        value, _ = attack_objective(field, truth.data, loss, segpgd_step)
        return float(value), np.zeros((image.height, image.width, 3))
