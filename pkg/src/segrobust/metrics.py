"""Foreground/background pixel accuracy and IoU, per-mask maxima, dataset means.

Foreground is the positive class; background metrics treat background as the
positive class (tn-based), which is what reproduces the published clean-row
arithmetic. Per-image results keep the best value over all predicted masks,
independently per metric family, and dataset results are unweighted means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core.types import BinaryMask
from .errors import (
    DegenerateClassError,
    DimensionMismatchError,
    EmptyDatasetError,
    EmptyPredictionListError,
)


@dataclass(frozen=True)
class PixelCounts:
    """Confusion tallies with truth as reference; foreground = positive."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassMetrics:
    pa_fg: float
    pa_bg: float
    iou_fg: float
    iou_bg: float

    @property
    def mpa(self) -> float:
        return (self.pa_fg + self.pa_bg) / 2.0

    @property
    def miou(self) -> float:
        return (self.iou_fg + self.iou_bg) / 2.0


@dataclass(frozen=True)
class EvalRecord:
    """Per-image (or aggregate) metric bundle for one evaluation condition.

    pa_* come from the mask maximizing mean pixel accuracy, iou_* from the
    mask maximizing mean IoU; the two argmax indices are kept so either
    selection convention can be recovered. Aggregates carry index -1.
    """

    image_id: str
    condition: str
    pa_fg: float
    pa_bg: float
    iou_fg: float
    iou_bg: float
    mpa: float
    miou: float
    chosen_pa_index: int
    chosen_iou_index: int

    def __post_init__(self):
        for name in ("pa_fg", "pa_bg", "iou_fg", "iou_bg", "mpa", "miou"):
            v = getattr(self, name)
            if not (0.0 - 1e-12 <= v <= 1.0 + 1e-12):
                raise ValueError(f"{name}={v} outside [0,1]")
        if abs(self.mpa - (self.pa_fg + self.pa_bg) / 2.0) > 1e-12:
            raise ValueError("mpa is not the mean of the class pixel accuracies")
        if abs(self.miou - (self.iou_fg + self.iou_bg) / 2.0) > 1e-12:
            raise ValueError("miou is not the mean of the class IoUs")

    def to_json_obj(self) -> dict:
        return {
            "image_id": self.image_id,
            "condition": self.condition,
            "pa_fg": self.pa_fg,
            "pa_bg": self.pa_bg,
            "iou_fg": self.iou_fg,
            "iou_bg": self.iou_bg,
            "mpa": self.mpa,
            "miou": self.miou,
            "chosen_pa_index": self.chosen_pa_index,
            "chosen_iou_index": self.chosen_iou_index,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EvalRecord":
        return cls(
            image_id=obj["image_id"],
            condition=obj["condition"],
            pa_fg=obj["pa_fg"],
            pa_bg=obj["pa_bg"],
            iou_fg=obj["iou_fg"],
            iou_bg=obj["iou_bg"],
            mpa=obj["mpa"],
            miou=obj["miou"],
            chosen_pa_index=obj["chosen_pa_index"],
            chosen_iou_index=obj["chosen_iou_index"],
        )


def confusion(pred: BinaryMask, truth: BinaryMask) -> PixelCounts:
    if (pred.height, pred.width) != (truth.height, truth.width):
        raise DimensionMismatchError(
            f"pred {pred.height}x{pred.width} vs truth {truth.height}x{truth.width}"
        )
    p, t = pred.data, truth.data
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return PixelCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def class_metrics(counts: PixelCounts) -> ClassMetrics:
    fg = counts.tp + counts.fn
    bg = counts.tn + counts.fp
    if fg == 0:
        raise DegenerateClassError("truth has no foreground pixels")
    if bg == 0:
        raise DegenerateClassError("truth has no background pixels")
    pa_fg = counts.tp / fg
    pa_bg = counts.tn / bg
    iou_fg = counts.tp / (counts.tp + counts.fp + counts.fn) if counts.tp else 0.0
    iou_bg = counts.tn / (counts.tn + counts.fn + counts.fp) if counts.tn else 0.0
    return ClassMetrics(pa_fg=pa_fg, pa_bg=pa_bg, iou_fg=iou_fg, iou_bg=iou_bg)


def mpa_selector(m: ClassMetrics) -> float:
    return m.mpa


def miou_selector(m: ClassMetrics) -> float:
    return m.miou


def metric_max_over_masks(
    preds: Sequence[BinaryMask],
    truth: BinaryMask,
    selector: Callable[[ClassMetrics], float],
) -> tuple[float, int]:
    """Best selector value over candidate masks; ties go to the smallest index."""
    if len(preds) == 0:
        raise EmptyPredictionListError("no candidate masks to evaluate")
    best_val, best_idx = -1.0, -1
    for i, pred in enumerate(preds):
        val = selector(class_metrics(confusion(pred, truth)))
        if val > best_val:
            best_val, best_idx = val, i
    return best_val, best_idx


def best_over_masks(preds: Sequence[BinaryMask], truth: BinaryMask,
                    image_id: str = "", condition: str = "") -> EvalRecord:
    """Evaluate every candidate and keep each metric family's own maximum."""
    if len(preds) == 0:
        raise EmptyPredictionListError("no candidate masks to evaluate")
    per_mask = [class_metrics(confusion(p, truth)) for p in preds]
    pa_idx = max(range(len(per_mask)), key=lambda i: (per_mask[i].mpa, -i))
    iou_idx = max(range(len(per_mask)), key=lambda i: (per_mask[i].miou, -i))
    pa_best, iou_best = per_mask[pa_idx], per_mask[iou_idx]
    return EvalRecord(
        image_id=image_id,
        condition=condition,
        pa_fg=pa_best.pa_fg,
        pa_bg=pa_best.pa_bg,
        iou_fg=iou_best.iou_fg,
        iou_bg=iou_best.iou_bg,
        mpa=pa_best.mpa,
        miou=iou_best.miou,
        chosen_pa_index=pa_idx,
        chosen_iou_index=iou_idx,
    )


def dataset_mean(records: Sequence[EvalRecord], condition: str | None = None) -> EvalRecord:
    """Unweighted field-wise mean over per-image records."""
    if len(records) == 0:
        raise EmptyDatasetError("cannot aggregate zero records")
    fields = ("pa_fg", "pa_bg", "iou_fg", "iou_bg", "mpa", "miou")
    means = {f: float(np.mean([getattr(r, f) for r in records])) for f in fields}
    tag = condition if condition is not None else records[0].condition
    return EvalRecord(
        image_id="<mean>",
        condition=tag,
        chosen_pa_index=-1,
        chosen_iou_index=-1,
        **means,
    )
