"""Independent oracles the tests check the implementation against.

Everything here is deliberately written from first principles (plain loops,
published reference algorithms, finite differences) and must not call into
the code paths it verifies.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64_reference(seed: int):
    """Direct transliteration of the published SplitMix64 C code."""
    state = seed & MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield (z ^ (z >> 31)) & MASK64


# First outputs for seed 0, as published alongside the reference code.
SPLITMIX64_SEED0_FIRST5 = (
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
    0x1B39896A51A8749B,
)


def confusion_by_sets(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int, int]:
    """tp, fp, tn, fn via an explicit double loop over pixels."""
    tp = fp = tn = fn = 0
    h, w = truth.shape
    for y in range(h):
        for x in range(w):
            p, t = bool(pred[y, x]), bool(truth[y, x])
            if p and t:
                tp += 1
            elif p and not t:
                fp += 1
            elif not p and t:
                fn += 1
            else:
                tn += 1
    return tp, fp, tn, fn


def class_metrics_by_sets(pred: np.ndarray, truth: np.ndarray):
    """(pa_fg, pa_bg, iou_fg, iou_bg) from explicit pixel-set arithmetic."""
    h, w = truth.shape
    pred_set = {(y, x) for y in range(h) for x in range(w) if pred[y, x]}
    truth_set = {(y, x) for y in range(h) for x in range(w) if truth[y, x]}
    all_set = {(y, x) for y in range(h) for x in range(w)}
    pred_bg = all_set - pred_set
    truth_bg = all_set - truth_set
    pa_fg = len(pred_set & truth_set) / len(truth_set)
    pa_bg = len(pred_bg & truth_bg) / len(truth_bg)
    iou_fg = len(pred_set & truth_set) / len(pred_set | truth_set) if pred_set | truth_set else 0.0
    iou_bg = len(pred_bg & truth_bg) / len(pred_bg | truth_bg) if pred_bg | truth_bg else 0.0
    return pa_fg, pa_bg, iou_fg, iou_bg


def max_over_masks_by_enumeration(preds, truth: np.ndarray, which: str):
    """(value, index) by evaluating every mask; which is 'mpa' or 'miou'."""
    best_val, best_idx = -1.0, -1
    for i, pred in enumerate(preds):
        pa_fg, pa_bg, iou_fg, iou_bg = class_metrics_by_sets(pred, truth)
        val = (pa_fg + pa_bg) / 2.0 if which == "mpa" else (iou_fg + iou_bg) / 2.0
        if val > best_val:
            best_val, best_idx = val, i
    return best_val, best_idx


def fd_gradient(fn, field: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a 2-D field."""
    g = np.zeros_like(field, dtype=np.float64)
    for idx in np.ndindex(field.shape):
        plus, minus = field.copy(), field.copy()
        plus[idx] += h
        minus[idx] -= h
        g[idx] = (fn(plus) - fn(minus)) / (2.0 * h)
    return g


def fd_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.abs(analytic).max(initial=0.0)),
                float(np.abs(numeric).max(initial=0.0)), 1e-12)
    return float(np.abs(analytic - numeric).max()) / scale


def protocol_oracle_clean(record, model, image_seed: int):
    """Straight-line reimplementation of the per-image evaluation protocol
    (clean condition): pick a mask, pick a point in it, predict, score every
    returned mask by set arithmetic, keep each family's maximum."""
    gen = splitmix64_reference(image_seed)
    n = len(record.annotations)
    mask_idx = next(gen) % n
    mask = record.annotations[mask_idx]
    set_pixels = [(y, x) for y in range(mask.height) for x in range(mask.width)
                  if mask.data[y, x]]
    point_idx = next(gen) % len(set_pixels)
    py, px = set_pixels[point_idx]

    from segrobust.core.types import PointPrompt  # prompt type only, no logic
    preds = model.predict(record.image, PointPrompt(x=px, y=py))
    pred_masks = [p.mask.data for p in preds]
    mpa, pa_idx = max_over_masks_by_enumeration(pred_masks, mask.data, "mpa")
    miou, iou_idx = max_over_masks_by_enumeration(pred_masks, mask.data, "miou")
    pa_fg, pa_bg, _, _ = class_metrics_by_sets(pred_masks[pa_idx], mask.data)
    _, _, iou_fg, iou_bg = class_metrics_by_sets(pred_masks[iou_idx], mask.data)
    return {
        "pa_fg": pa_fg, "pa_bg": pa_bg, "iou_fg": iou_fg, "iou_bg": iou_bg,
        "mpa": mpa, "miou": miou,
        "chosen_pa_index": pa_idx, "chosen_iou_index": iou_idx,
    }
