"""Wrapper exposing a real Segment Anything checkpoint behind the protocol.

Needs the `real` extra (torch + segment-anything) and a checkpoint file.
Input gradients are taken in the original pixel space: the resize/normalize
/pad preprocessing is rebuilt from differentiable torch ops so the chain
rule runs all the way back to the caller's pixels.
"""

from __future__ import annotations

import numpy as np


class RealSamModel:
    multimask = True
    concurrent_safe = False

    def __init__(self, checkpoint_path: str, model_type: str = "vit_h",
                 device: str = "cpu"):
        try:
            import torch
            from segment_anything import sam_model_registry
        except ImportError as e:
            raise RuntimeError(
                "real-model mode needs the 'real' extra: pip install 'sam-bridge[real]'"
            ) from e
        self._torch = torch
        self.device = torch.device(device)
        self.sam = sam_model_registry[model_type](checkpoint=checkpoint_path)
        self.sam.to(self.device)
        self.sam.eval()
        self.name = f"sam-{model_type}"
        self._encoder_size = self.sam.image_encoder.img_size

    # -- shared forward ------------------------------------------------------

    def _forward(self, image_t, x: int, y: int):
        """image_t: torch float32 (H, W, 3) in [0,1], may require grad.

        Returns per-head probability maps at the original resolution plus the
        model's quality scores.
        """
        torch = self._torch
        h, w = image_t.shape[:2]
        scale = self._encoder_size / max(h, w)
        new_h, new_w = round(h * scale), round(w * scale)

        chw = image_t.permute(2, 0, 1).unsqueeze(0) * 255.0
        resized = torch.nn.functional.interpolate(
            chw, size=(new_h, new_w), mode="bilinear", align_corners=False,
            antialias=True)
        mean = torch.as_tensor(self.sam.pixel_mean, device=self.device).view(1, 3, 1, 1)
        std = torch.as_tensor(self.sam.pixel_std, device=self.device).view(1, 3, 1, 1)
        normalized = (resized - mean) / std
        padded = torch.nn.functional.pad(
            normalized, (0, self._encoder_size - new_w, 0, self._encoder_size - new_h))

        embedding = self.sam.image_encoder(padded)
        point = torch.tensor([[[x * scale, y * scale]]], dtype=torch.float32,
                             device=self.device)
        labels = torch.ones((1, 1), dtype=torch.int, device=self.device)
        sparse, dense = self.sam.prompt_encoder(points=(point, labels),
                                                boxes=None, masks=None)
        logits, scores = self.sam.mask_decoder(
            image_embeddings=embedding,
            image_pe=self.sam.prompt_encoder.get_dense_pe(),
            sparse_prompt_embeddings=sparse,
            dense_prompt_embeddings=dense,
            multimask_output=True,
        )
        full = torch.nn.functional.interpolate(
            logits, size=(self._encoder_size, self._encoder_size), mode="bilinear",
            align_corners=False)
        cropped = full[..., :new_h, :new_w]
        original = torch.nn.functional.interpolate(
            cropped, size=(h, w), mode="bilinear", align_corners=False)
        return torch.sigmoid(original[0]), scores[0]

    # -- protocol surface ------------------------------------------------------

    def predict(self, image: np.ndarray, x: int, y: int):
        torch = self._torch
        with torch.no_grad():
            image_t = torch.as_tensor(image, dtype=torch.float32, device=self.device)
            probs, scores = self._forward(image_t, x, y)
        out = []
        for head in range(probs.shape[0]):
            field = probs[head].cpu().numpy().astype(np.float64)
            field = np.clip(field, 0.0, 1.0)
            mask = field > 0.5
            out.append((mask, field, float(scores[head].item())))
        return out

    def input_gradient(self, image: np.ndarray, x: int, y: int, truth: np.ndarray,
                       loss_spec: dict, segpgd, mask_index):
        torch = self._torch
        image_t = torch.as_tensor(image, dtype=torch.float32, device=self.device)
        image_t.requires_grad_(True)
        probs, scores = self._forward(image_t, x, y)
        if mask_index is None:
            mask_index = int(scores.argmax().item())
        field = probs[mask_index].clamp(0.0, 1.0)
        loss = self._loss_in_graph(field, truth, loss_spec, segpgd)
        loss.backward()
        grad = image_t.grad.detach().cpu().numpy().astype(np.float64)
        return float(loss.item()), grad

    def _loss_in_graph(self, field, truth: np.ndarray, loss_spec: dict, segpgd):
        """The protocol's loss formulas, rebuilt inside the autodiff graph."""
        torch = self._torch
        t = torch.as_tensor(truth, dtype=torch.float32, device=self.device)
        kind = loss_spec["kind"]
        fw = float(loss_spec.get("focal_weight", 20.0))
        dw = float(loss_spec.get("dice_weight", 1.0))
        gamma = float(loss_spec.get("gamma", 2.0))
        alpha = float(loss_spec.get("alpha", 0.25))
        smooth = float(loss_spec.get("smooth", 1.0))
        n = field.numel()

        if kind == "mse":
            base = (field - t) ** 2
            if segpgd is None:
                return base.mean()
        elif kind == "focal_dice":
            pc = field.clamp(1e-7, 1 - 1e-7)
            pt = torch.where(t > 0.5, pc, 1 - pc)
            at = torch.where(t > 0.5, torch.full_like(pc, alpha),
                             torch.full_like(pc, 1 - alpha))
            focal_pix = -at * (1 - pt) ** gamma * torch.log(pt)
            if segpgd is None:
                dice = 1 - (2 * (field * t).sum() + smooth) / (field.sum() + t.sum() + smooth)
                return fw * focal_pix.mean() + dw * dice
            dice_pix = 1 - (2 * field * t + smooth) / (field + t + smooth)
            base = fw * focal_pix + dw * dice_pix
        else:
            raise ValueError(f"unknown loss kind {kind!r}")

        step, total = segpgd
        lam = (step - 1) / (2.0 * total)
        correct = ((field > 0.5) == (t > 0.5)).float().detach()
        weights = correct * (1 - lam) + (1 - correct) * lam
        return (weights * base).sum() / n
