"""Attack objectives: focal+dice composite (20:1), MSE ablation, SegPGD weighting.

Every loss returns (value, dL/dprobs) with the gradient in closed form; the
finite-difference suite in tests/ holds these to <1e-4 relative error. The
SegPGD reweighting follows its source formulation: group sums are normalized
by the full pixel count, and the correct/wrong split is taken at threshold
0.5 and treated as constant when differentiating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError, StepOutOfRangeError

PROB_EPS = 1e-7

LOSS_KINDS = ("focal_dice", "mse")


@dataclass(frozen=True)
class LossSpec:
    kind: str = "focal_dice"
    focal_weight: float = 20.0
    dice_weight: float = 1.0
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    dice_smooth: float = 1.0
    segpgd_weighting: bool = False

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.focal_weight < 0 or self.dice_weight < 0:
            raise ValueError("loss weights must be >= 0")
        if self.focal_gamma < 0:
            raise ValueError("focal gamma must be >= 0")
        if not 0.0 <= self.focal_alpha <= 1.0:
            raise ValueError("focal alpha must be in [0,1]")
        if self.dice_smooth <= 0:
            raise ValueError("dice smooth must be > 0")

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "focal_weight": self.focal_weight,
            "dice_weight": self.dice_weight,
            "gamma": self.focal_gamma,
            "alpha": self.focal_alpha,
            "smooth": self.dice_smooth,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "LossSpec":
        return cls(
            kind=obj["kind"],
            focal_weight=obj.get("focal_weight", 20.0),
            dice_weight=obj.get("dice_weight", 1.0),
            focal_gamma=obj.get("gamma", 2.0),
            focal_alpha=obj.get("alpha", 0.25),
            dice_smooth=obj.get("smooth", 1.0),
        )


@dataclass(frozen=True)
class PredictionField:
    """H x W foreground probability map, pre-threshold."""

    probs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=np.float64)
        if a.ndim != 2:
            raise ShapeMismatchError(f"prediction field must be HxW, got {a.shape}")
        if not np.isfinite(a).all():
            raise ValueError("prediction field contains non-finite values")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("prediction field values outside [0,1]")
        object.__setattr__(self, "probs", a)


def _check_shapes(probs: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ShapeMismatchError(f"probs {p.shape} vs truth {t.shape}")
    return p, t.astype(bool)


def focal_loss(probs, truth, gamma: float = 2.0, alpha: float = 0.25):
    """Mean of -alpha_t (1-p_t)^gamma log(p_t); p clamped to [eps, 1-eps]."""
    p, t = _check_shapes(probs, truth)
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    pt = np.where(t, pc, 1.0 - pc)
    at = np.where(t, alpha, 1.0 - alpha)
    one_minus = 1.0 - pt
    per_pixel = -at * one_minus**gamma * np.log(pt)
    # d/dpt then chain through dpt/dp = +/-1; flat inside the clamped bands.
    dpt = at * (gamma * one_minus ** (gamma - 1.0) * np.log(pt) - one_minus**gamma / pt)
    grad = np.where(t, dpt, -dpt)
    grad = np.where((p > PROB_EPS) & (p < 1.0 - PROB_EPS), grad, 0.0)
    n = p.size
    return float(per_pixel.sum() / n), grad / n


def focal_loss_per_pixel(probs, truth, gamma: float = 2.0, alpha: float = 0.25):
    """Per-pixel focal terms and their diagonal derivatives (no mean)."""
    p, t = _check_shapes(probs, truth)
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    pt = np.where(t, pc, 1.0 - pc)
    at = np.where(t, alpha, 1.0 - alpha)
    one_minus = 1.0 - pt
    field = -at * one_minus**gamma * np.log(pt)
    dpt = at * (gamma * one_minus ** (gamma - 1.0) * np.log(pt) - one_minus**gamma / pt)
    grad = np.where(t, dpt, -dpt)
    grad = np.where((p > PROB_EPS) & (p < 1.0 - PROB_EPS), grad, 0.0)
    return field, grad


def dice_loss(probs, truth, smooth: float = 1.0):
    """Soft dice: 1 - (2 sum(p t) + s) / (sum(p) + sum(t) + s)."""
    p, t = _check_shapes(probs, truth)
    tf = t.astype(np.float64)
    num = 2.0 * float((p * tf).sum()) + smooth
    den = float(p.sum()) + float(tf.sum()) + smooth
    loss = 1.0 - num / den
    grad = (num - 2.0 * tf * den) / (den * den)
    return float(loss), grad


def mse_loss(probs, truth):
    p, t = _check_shapes(probs, truth)
    tf = t.astype(np.float64)
    diff = p - tf
    n = p.size
    return float((diff * diff).sum() / n), 2.0 * diff / n


def composite_loss(probs, truth, spec: LossSpec):
    """Attack objective J: focal_dice mixes 20:1 by default; mse is the ablation."""
    if spec.kind == "mse":
        return mse_loss(probs, truth)
    fl, fg = focal_loss(probs, truth, spec.focal_gamma, spec.focal_alpha)
    dl, dg = dice_loss(probs, truth, spec.dice_smooth)
    loss = spec.focal_weight * fl + spec.dice_weight * dl
    grad = spec.focal_weight * fg + spec.dice_weight * dg
    return float(loss), grad


def dice_loss_per_pixel(probs, truth, smooth: float = 1.0):
    """Pixel-local dice analogue 1 - (2 p t + s)/(p + t + s) with its derivative.

    The set-level dice couples every pixel (its Jacobian is dense), so the
    SegPGD per-pixel base uses this decomposable analogue instead.
    """
    p, t = _check_shapes(probs, truth)
    tf = t.astype(np.float64)
    num = 2.0 * p * tf + smooth
    den = p + tf + smooth
    field = 1.0 - num / den
    grad = (num - 2.0 * tf * den) / (den * den)
    return field, grad


def pixelwise_loss_field(probs, truth, spec: LossSpec):
    """Per-pixel base loss for SegPGD weighting; diagonal Jacobian by construction."""
    if spec.kind == "mse":
        p, t = _check_shapes(probs, truth)
        tf = t.astype(np.float64)
        diff = p - tf
        return diff * diff, 2.0 * diff
    ff, fgrad = focal_loss_per_pixel(probs, truth, spec.focal_gamma, spec.focal_alpha)
    df, dgrad = dice_loss_per_pixel(probs, truth, spec.dice_smooth)
    return (spec.focal_weight * ff + spec.dice_weight * df,
            spec.focal_weight * fgrad + spec.dice_weight * dgrad)


def segpgd_lambda(step: int, total: int) -> float:
    return (step - 1) / (2.0 * total)


def segpgd_weighted_loss(probs, truth, step: int, total: int, base_field, base_grad_field):
    """Reweight a per-pixel loss: (1-lambda) on correctly classified pixels,
    lambda on misclassified ones, both normalized by the full pixel count."""
    if total < 1 or not (1 <= step <= total):
        raise StepOutOfRangeError(f"step {step} outside 1..{total}")
    p, t = _check_shapes(probs, truth)
    base = np.asarray(base_field, dtype=np.float64)
    base_grad = np.asarray(base_grad_field, dtype=np.float64)
    if base.shape != p.shape or base_grad.shape != p.shape:
        raise ShapeMismatchError("base field/grad shape mismatch")
    lam = segpgd_lambda(step, total)
    correct = (p > 0.5) == t
    w = np.where(correct, 1.0 - lam, lam)
    n = p.size
    return float((w * base).sum() / n), w * base_grad / n


def attack_objective(probs, truth, spec: LossSpec, segpgd_step: tuple[int, int] | None = None):
    """Loss and dL/dprobs as consumed by segmenter gradient backends."""
    if segpgd_step is None:
        return composite_loss(probs, truth, spec)
    base, base_grad = pixelwise_loss_field(probs, truth, spec)
    t, total = segpgd_step
    return segpgd_weighted_loss(probs, truth, t, total, base, base_grad)
