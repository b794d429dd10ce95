"""Attack-objective formulas, restated from docs/protocol.md.

Independent of the client toolkit on purpose: agreement between the two
implementations is itself a checked property (tolerance 1e-5 at float32
wire precision).
"""

from __future__ import annotations

import numpy as np

PROB_EPS = 1e-7


def focal_terms(p: np.ndarray, t: np.ndarray, gamma: float, alpha: float):
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    pt = np.where(t, pc, 1.0 - pc)
    at = np.where(t, alpha, 1.0 - alpha)
    one_minus = 1.0 - pt
    values = -at * one_minus**gamma * np.log(pt)
    dpt = at * (gamma * one_minus ** (gamma - 1.0) * np.log(pt) - one_minus**gamma / pt)
    grads = np.where(t, dpt, -dpt)
    grads = np.where((p > PROB_EPS) & (p < 1.0 - PROB_EPS), grads, 0.0)
    return values, grads


def dice_set(p: np.ndarray, t: np.ndarray, smooth: float):
    tf = t.astype(np.float64)
    num = 2.0 * float((p * tf).sum()) + smooth
    den = float(p.sum() + tf.sum()) + smooth
    value = 1.0 - num / den
    grad = (num - 2.0 * tf * den) / (den * den)
    return value, grad


def dice_pixelwise(p: np.ndarray, t: np.ndarray, smooth: float):
    tf = t.astype(np.float64)
    num = 2.0 * p * tf + smooth
    den = p + tf + smooth
    values = 1.0 - num / den
    grads = (num - 2.0 * tf * den) / (den * den)
    return values, grads


def loss_and_grad_wrt_probs(p: np.ndarray, t: np.ndarray, loss_spec: dict,
                            segpgd: tuple[int, int] | None):
    """(loss, dL/dp) for the wire-level loss description."""
    kind = loss_spec["kind"]
    fw = float(loss_spec.get("focal_weight", 20.0))
    dw = float(loss_spec.get("dice_weight", 1.0))
    gamma = float(loss_spec.get("gamma", 2.0))
    alpha = float(loss_spec.get("alpha", 0.25))
    smooth = float(loss_spec.get("smooth", 1.0))
    n = p.size

    if segpgd is None:
        if kind == "mse":
            diff = p - t.astype(np.float64)
            return float((diff * diff).mean()), 2.0 * diff / n
        if kind != "focal_dice":
            raise ValueError(f"unknown loss kind {kind!r}")
        fvals, fgrads = focal_terms(p, t, gamma, alpha)
        dval, dgrad = dice_set(p, t, smooth)
        return (fw * float(fvals.mean()) + dw * dval,
                fw * fgrads / n + dw * dgrad)

    step, total = segpgd
    if not (1 <= step <= total):
        raise ValueError(f"segpgd step {step} outside 1..{total}")
    if kind == "mse":
        diff = p - t.astype(np.float64)
        base, base_grad = diff * diff, 2.0 * diff
    elif kind == "focal_dice":
        fvals, fgrads = focal_terms(p, t, gamma, alpha)
        dvals, dgrads = dice_pixelwise(p, t, smooth)
        base = fw * fvals + dw * dvals
        base_grad = fw * fgrads + dw * dgrads
    else:
        raise ValueError(f"unknown loss kind {kind!r}")
    lam = (step - 1) / (2.0 * total)
    weights = np.where((p > 0.5) == t, 1.0 - lam, lam)
    return float((weights * base).sum() / n), weights * base_grad / n
