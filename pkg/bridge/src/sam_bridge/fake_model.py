"""Deterministic stub model for protocol and attack testing without weights.

Each head's logit is a fixed linear function of the channel-mean pixel value
and the normalized distance to the prompt point, pushed through a sigmoid;
the input gradient is coded by hand, so end-to-end attack plumbing can be
exercised with exact gradients and zero model dependencies.
"""

from __future__ import annotations

import numpy as np

from .losses import loss_and_grad_wrt_probs

PIXEL_GAIN = 3.0          # weight on the channel-mean value
DISTANCE_GAIN = 6.0       # weight on distance / image diagonal
HEAD_OFFSETS = (1.5, 2.5, 3.5)  # one per head: larger offset, larger mask


class FakeModel:
    name = "fake-analytic"
    multimask = True
    concurrent_safe = True

    @staticmethod
    def _logits(image: np.ndarray, x: int, y: int) -> np.ndarray:
        h, w = image.shape[:2]
        mean = image.mean(axis=2)
        gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
        dist = np.sqrt((gy - y) ** 2 + (gx - x) ** 2) / np.sqrt(h * h + w * w)
        base = PIXEL_GAIN * mean - DISTANCE_GAIN * dist
        return np.stack([base + off for off in HEAD_OFFSETS], axis=0)

    def predict(self, image: np.ndarray, x: int, y: int):
        """[(mask, field, score)] per head; mask = field > 0.5."""
        fields = 1.0 / (1.0 + np.exp(-self._logits(image, x, y)))
        out = []
        for field in fields:
            mask = field > 0.5
            score = float(field[mask].mean()) if mask.any() else 0.0
            out.append((mask, field, score))
        return out

    def input_gradient(self, image: np.ndarray, x: int, y: int, truth: np.ndarray,
                       loss_spec: dict, segpgd, mask_index):
        preds = self.predict(image, x, y)
        if mask_index is None:
            mask_index = max(range(len(preds)), key=lambda i: (preds[i][2], -i))
        field = preds[mask_index][1]
        value, dfield = loss_and_grad_wrt_probs(field, truth, loss_spec, segpgd)
        # d(field)/d(pixel channel) = sigmoid' * PIXEL_GAIN / 3 channels
        dlogit = dfield * field * (1.0 - field)
        per_channel = dlogit * (PIXEL_GAIN / 3.0)
        return value, np.repeat(per_channel[:, :, None], 3, axis=2)
