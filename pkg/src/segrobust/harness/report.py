"""Report serialization: canonical JSON, per-condition CSV, qualitative overlays."""

from __future__ import annotations

import csv
import json
import os

import numpy as np
from scipy import ndimage

from ..core.imageio import save_image_png
from ..core.types import ImageTensor
from ..metrics import EvalRecord, dataset_mean
from .evaluate import ReportBundle

CSV_COLUMNS = ("condition", "mpa", "miou", "pa_bg", "pa_fg", "iou_bg", "iou_fg")


def bundle_to_json_obj(bundle: ReportBundle) -> dict:
    return {
        "aggregates": {tag: rec.to_json_obj() for tag, rec in bundle.aggregates.items()},
        "per_image": [rec.to_json_obj() for rec in bundle.per_image],
        "provenance": bundle.provenance,
    }


def bundle_to_canonical_json(bundle: ReportBundle) -> str:
    """Sorted keys and shortest round-trip floats; stable across runs."""
    return json.dumps(bundle_to_json_obj(bundle), sort_keys=True, indent=2) + "\n"


def bundle_from_json_obj(obj: dict) -> ReportBundle:
    aggregates = {tag: EvalRecord.from_json_obj(rec)
                  for tag, rec in obj["aggregates"].items()}
    per_image = [EvalRecord.from_json_obj(rec) for rec in obj["per_image"]]
    bundle = ReportBundle(aggregates=aggregates, per_image=per_image,
                          provenance=obj.get("provenance", {}))
    verify_bundle(bundle)
    return bundle


def verify_bundle(bundle: ReportBundle, tol: float = 1e-12) -> None:
    """Aggregates must equal recomputed means of their per-image rows."""
    by_tag: dict[str, list[EvalRecord]] = {}
    for row in bundle.per_image:
        by_tag.setdefault(row.condition, []).append(row)
    for tag, agg in bundle.aggregates.items():
        rows = by_tag.get(tag, [])
        if not rows:
            raise ValueError(f"aggregate {tag!r} has no per-image rows")
        recomputed = dataset_mean(rows, condition=tag)
        for name in ("pa_fg", "pa_bg", "iou_fg", "iou_bg", "mpa", "miou"):
            if abs(getattr(agg, name) - getattr(recomputed, name)) > tol:
                raise ValueError(f"aggregate {tag!r}.{name} drifted from row mean")


def load_report(path) -> ReportBundle:
    with open(path, "r", encoding="utf-8") as fh:
        return bundle_from_json_obj(json.load(fh))


def emit_report(bundle: ReportBundle, out_dir, formats=("json", "csv")) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(bundle_to_canonical_json(bundle))
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "report.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for tag in sorted(bundle.aggregates):
                rec = bundle.aggregates[tag]
                writer.writerow([tag, rec.mpa, rec.miou, rec.pa_bg, rec.pa_fg,
                                 rec.iou_bg, rec.iou_fg])
        written.append(path)
    return written


def _contour(mask: np.ndarray) -> np.ndarray:
    return mask & ~ndimage.binary_erosion(mask, border_value=0)


def overlay_png_sink(out_dir):
    """Returns an overlay writer: image + truth/prediction contours + prompt star."""
    overlays_dir = os.path.join(out_dir, "overlays")
    os.makedirs(overlays_dir, exist_ok=True)

    def sink(record, tag, image, sampled, preds, rec):
        canvas = image.data.copy()
        truth_edge = _contour(sampled.mask.data)
        canvas[truth_edge] = (0.0, 1.0, 0.0)
        best = preds[rec.chosen_iou_index].mask.data
        canvas[_contour(best)] = (1.0, 0.0, 0.0)
        y, x = sampled.point.y, sampled.point.x
        h, w = canvas.shape[:2]
        for dy, dx in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1),
                       (2, 0), (-2, 0), (0, 2), (0, -2)):
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w:
                canvas[yy, xx] = (1.0, 1.0, 0.0)
        slug = tag.replace("/", "_").replace("(", ".").replace(")", "").replace(",", ".")
        save_image_png(ImageTensor(canvas),
                       os.path.join(overlays_dir, f"{record.id}.{slug}.png"))

    return sink
