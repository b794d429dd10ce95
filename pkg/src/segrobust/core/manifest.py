"""Dataset manifest: JSON index of images and their ground-truth mask files."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from ..errors import DimensionMismatchError, MissingFileError, ParseError
from .imageio import load_image_png, load_mask_png
from .types import AnnotatedImage

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class MaskEntry:
    mask_path: str
    area_px: int


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    image_path: str
    masks: tuple[MaskEntry, ...]


@dataclass(frozen=True)
class DatasetManifest:
    version: int
    records: tuple[ManifestRecord, ...]

    def to_json_obj(self) -> dict:
        return {
            "version": self.version,
            "records": [
                {
                    "id": r.id,
                    "image_path": r.image_path,
                    "masks": [
                        {"mask_path": m.mask_path, "area_px": m.area_px} for m in r.masks
                    ],
                }
                for r in self.records
            ],
        }


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParseError(msg)


def manifest_from_json_obj(obj) -> DatasetManifest:
    _require(isinstance(obj, dict), "manifest root must be an object")
    _require(obj.get("version") == MANIFEST_VERSION,
             f"unsupported manifest version {obj.get('version')!r}")
    recs_obj = obj.get("records")
    _require(isinstance(recs_obj, list), "manifest 'records' must be a list")
    records = []
    for i, r in enumerate(recs_obj):
        ctx = f"records[{i}]"
        _require(isinstance(r, dict), f"{ctx} must be an object")
        _require(isinstance(r.get("id"), str) and r["id"], f"{ctx}.id must be a non-empty string")
        _require(isinstance(r.get("image_path"), str), f"{ctx}.image_path must be a string")
        masks_obj = r.get("masks")
        _require(isinstance(masks_obj, list) and len(masks_obj) >= 1,
                 f"{ctx}.masks must be a non-empty list")
        masks = []
        for j, m in enumerate(masks_obj):
            mctx = f"{ctx}.masks[{j}]"
            _require(isinstance(m, dict), f"{mctx} must be an object")
            _require(isinstance(m.get("mask_path"), str), f"{mctx}.mask_path must be a string")
            _require(isinstance(m.get("area_px"), int) and m["area_px"] > 0,
                     f"{mctx}.area_px must be a positive integer")
            masks.append(MaskEntry(mask_path=m["mask_path"], area_px=m["area_px"]))
        records.append(ManifestRecord(id=r["id"], image_path=r["image_path"],
                                      masks=tuple(masks)))
    return DatasetManifest(version=MANIFEST_VERSION, records=tuple(records))


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    if not os.path.isfile(path):
        raise MissingFileError(f"manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"manifest is not valid JSON: line {e.lineno} col {e.colno}") from e
    return manifest_from_json_obj(obj)


def save_manifest(manifest: DatasetManifest, path: str | os.PathLike) -> None:
    """Canonical serialization: sorted keys, 2-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_json_obj(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_annotated_images(manifest: DatasetManifest,
                          base_dir: str | os.PathLike = ".") -> list[AnnotatedImage]:
    """Decode every record, validating stored areas against decoded popcounts."""
    out = []
    for rec in manifest.records:
        image = load_image_png(os.path.join(base_dir, rec.image_path))
        masks = []
        for j, entry in enumerate(rec.masks):
            mask = load_mask_png(os.path.join(base_dir, entry.mask_path))
            if mask.area != entry.area_px:
                raise DimensionMismatchError(
                    f"record {rec.id!r} mask {j}: manifest area {entry.area_px} "
                    f"!= decoded popcount {mask.area}"
                )
            masks.append(mask)
        out.append(AnnotatedImage(id=rec.id, image=image, annotations=tuple(masks)))
    return out
