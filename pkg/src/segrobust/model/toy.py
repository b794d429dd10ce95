"""Differentiable stand-in segmenter with hand-written backprop.

Two 3x3 conv+ReLU layers over RGB plus a prompt channel, then three 1x1
sigmoid heads. The weights are a fixed deterministic construction rather
than a plain random draw:

  * trunk channel 0 carries a 3x3 average of the prompt bump 1/(1+d/tau)
    straight through both layers;
  * trunk channels 1-3 are He-scaled random convolutions of the RGB input,
    biased negative so most units are dormant on clean images;
  * each head reads the prompt feature with a sharp gain against its own
    size cut, plus one shared random readout of the image features.

The heads therefore produce three nested point-centered masks of different
sizes, modulated by image content, which a purely random net cannot do: it
would sit at the random-mask floor where gradient attacks have nothing to
degrade. Dormant units also give iterative attacks something one-step
attacks cannot see. Accuracy is still a non-goal; exact input gradients are
the point. All random draws are He-scaled Box-Muller gaussians from the
shared deterministic stream in the fixed order below, so every port of this
model can reproduce the weights bit for bit (see docs/protocol.md).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core.rng import BulkRng
from ..core.types import BinaryMask, ImageTensor, PointPrompt
from ..errors import DimensionMismatchError, NonFiniteGradientError
from ..losses import LossSpec, PredictionField, attack_objective
from .contract import (
    MaskPrediction,
    SegmenterContract,
    SegmenterDescriptor,
    select_mask_index,
)

DEFAULT_SEED = 0xB10B
PROMPT_TAU = 8.0

# Fixed construction constants (shared with every port of this model).
PROMPT_GAIN = 24.0        # sigmoid sharpness of the prompt-bump pathway
IMAGE_GAIN = 6.0          # weight of the shared image-feature readout
TRUNK_GAIN = 3.0          # multiplier on the He std of the trunk convolutions
DORMANCY_BIAS_1 = 1.5     # negative bias on layer-1 image channels
DORMANCY_BIAS_2 = 3.0     # negative bias on layer-2 image channels
HEAD_CUTS = (0.65, 0.5, 0.33)  # per-head thresholds on the prompt bump (small..large)


def _conv_same(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3 'same' convolution, zero padded. x: (H,W,Cin), w: (Cout,Cin,3,3)."""
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(xp, (3, 3), axis=(0, 1))  # (H,W,Cin,3,3)
    return np.einsum("hwcij,ocij->hwo", win, w, optimize=True) + b


def _conv_same_input_grad(dz: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gradient of _conv_same w.r.t. its input: conv with flipped, transposed taps."""
    wt = np.transpose(w, (1, 0, 2, 3))[:, :, ::-1, ::-1]
    return _conv_same(dz, wt, np.zeros(wt.shape[0]))


class ToyBlobNet(SegmenterContract):
    def __init__(self, seed: int = DEFAULT_SEED, tau: float = PROMPT_TAU):
        self.tau = float(tau)
        rng = BulkRng(seed)
        # Draw order is fixed: w1 image taps, w2 image taps, head readout,
        # each C-order; He std = sqrt(2 / fan_in) scaled by the fixed gains.
        self.w1 = np.zeros((4, 4, 3, 3))
        self.w1[0, 3, :, :] = 1.0 / 9.0  # prompt bump, 3x3 mean
        self.w1[1:, :3] = rng.gaussians((3, 3, 3, 3)) * np.sqrt(2.0 / (3 * 9)) * TRUNK_GAIN
        self.b1 = np.array([0.0, -DORMANCY_BIAS_1, -DORMANCY_BIAS_1, -DORMANCY_BIAS_1])
        self.w2 = np.zeros((4, 4, 3, 3))
        self.w2[0, 0, 1, 1] = 1.0  # prompt feature passes through untouched
        self.w2[1:, 1:] = rng.gaussians((3, 3, 3, 3)) * np.sqrt(2.0 / (3 * 9)) * TRUNK_GAIN
        self.b2 = np.array([0.0, -DORMANCY_BIAS_2, -DORMANCY_BIAS_2, -DORMANCY_BIAS_2])
        shared_readout = rng.gaussians(3) * np.sqrt(2.0 / 3) * IMAGE_GAIN
        self.w3 = np.zeros((3, 4))
        self.w3[:, 0] = PROMPT_GAIN
        self.w3[:, 1:] = shared_readout[None, :]
        self.b3 = -PROMPT_GAIN * np.asarray(HEAD_CUTS)

    def descriptor(self) -> SegmenterDescriptor:
        return SegmenterDescriptor(name="toy-blobnet", multimask=True, concurrent_safe=True)

    def _prompt_channel(self, h: int, w: int, prompt: PointPrompt) -> np.ndarray:
        gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
        d = np.sqrt((gy - prompt.y) ** 2 + (gx - prompt.x) ** 2)
        return 1.0 / (1.0 + d / self.tau)

    def _forward(self, image: ImageTensor, prompt: PointPrompt):
        prompt.check_within(image.height, image.width)
        x = np.concatenate(
            [image.data, self._prompt_channel(image.height, image.width, prompt)[..., None]],
            axis=2,
        )
        z1 = _conv_same(x, self.w1, self.b1)
        a1 = np.maximum(z1, 0.0)
        z2 = _conv_same(a1, self.w2, self.b2)
        a2 = np.maximum(z2, 0.0)
        logits = np.einsum("hwc,oc->hwo", a2, self.w3) + self.b3
        probs = 1.0 / (1.0 + np.exp(-logits))
        return {"z1": z1, "z2": z2, "a2": a2, "probs": probs}

    def predict(self, image: ImageTensor, prompt: PointPrompt) -> list[MaskPrediction]:
        probs = self._forward(image, prompt)["probs"]
        out = []
        for head in range(probs.shape[2]):
            field = probs[:, :, head]
            mask = field > 0.5
            score = float(field[mask].mean()) if mask.any() else 0.0
            out.append(
                MaskPrediction(
                    mask=BinaryMask(mask), field=PredictionField(field), score=score
                )
            )
        return out

    def input_gradient(
        self,
        image: ImageTensor,
        prompt: PointPrompt,
        truth: BinaryMask,
        loss: LossSpec,
        segpgd_step: tuple[int, int] | None = None,
        mask_index: int | None = None,
    ) -> tuple[float, np.ndarray]:
        if (truth.height, truth.width) != (image.height, image.width):
            raise DimensionMismatchError("truth mask does not match image dimensions")
        state = self._forward(image, prompt)
        probs = state["probs"]
        if mask_index is None:
            preds = []
            for head in range(probs.shape[2]):
                field = probs[:, :, head]
                m = field > 0.5
                score = float(field[m].mean()) if m.any() else 0.0
                preds.append((score, head))
            mask_index = max(range(len(preds)), key=lambda i: (preds[i][0], -i))
        field = probs[:, :, mask_index]
        loss_value, dfield = attack_objective(field, truth.data, loss, segpgd_step)

        dlogits = np.zeros_like(probs)
        dlogits[:, :, mask_index] = dfield * field * (1.0 - field)
        da2 = np.einsum("hwo,oc->hwc", dlogits, self.w3)
        dz2 = da2 * (state["z2"] > 0.0)
        da1 = _conv_same_input_grad(dz2, self.w2)
        dz1 = da1 * (state["z1"] > 0.0)
        dx = _conv_same_input_grad(dz1, self.w1)
        grad = dx[:, :, :3]  # prompt channel carries no image gradient
        if not np.isfinite(grad).all() or not np.isfinite(loss_value):
            raise NonFiniteGradientError("toy model produced non-finite gradient")
        return float(loss_value), grad

    # convenience used by tests: field selection mirroring the attack path
    def selected_head(self, image: ImageTensor, prompt: PointPrompt) -> int:
        return select_mask_index(self.predict(image, prompt))
