"""Desk-scale synthetic dataset: textured images with disjoint shape masks."""

from __future__ import annotations

import os

import numpy as np

from ..core.imageio import save_image_png, save_mask_png
from ..core.manifest import DatasetManifest, ManifestRecord, MaskEntry, save_manifest
from ..core.rng import BulkRng, DeterministicRng
from ..core.types import AnnotatedImage, BinaryMask, ImageTensor
from ..corruptions import plasma_fractal, _next_pow2


def _texture(rng: BulkRng, h: int, w: int) -> np.ndarray:
    size = _next_pow2(max(h, w, 4))
    chans = [plasma_fractal(rng, size, 2.2)[:h, :w] for _ in range(3)]
    img = np.stack(chans, axis=-1)
    return 0.15 + 0.7 * img


def _shape_mask(rng: BulkRng, h: int, w: int, kind: str) -> np.ndarray:
    margin = 2
    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    min_side = min(h, w)
    ry = min_side * (0.06 + 0.14 * rng.uniforms(1)[0])
    rx = min_side * (0.06 + 0.14 * rng.uniforms(1)[0])
    cy = margin + ry + rng.uniforms(1)[0] * (h - 2 * (margin + ry))
    cx = margin + rx + rng.uniforms(1)[0] * (w - 2 * (margin + rx))
    if kind == "rect":
        return (np.abs(gy - cy) <= ry) & (np.abs(gx - cx) <= rx)
    if kind == "ellipse":
        return ((gy - cy) / ry) ** 2 + ((gx - cx) / rx) ** 2 <= 1.0
    # blob: ellipse whose radius wobbles with angle
    theta = np.arctan2(gy - cy, gx - cx)
    k = 3 + int(rng.uniforms(1)[0] * 3)
    phase = rng.uniforms(1)[0] * 2 * np.pi
    wobble = 1.0 + 0.25 * np.sin(k * theta + phase)
    return ((gy - cy) / (ry * wobble)) ** 2 + ((gx - cx) / (rx * wobble)) ** 2 <= 1.0


def make_annotated_image(seed: int, image_id: str, h: int, w: int) -> AnnotatedImage:
    """One deterministic textured image with 2-5 disjoint labelled shapes."""
    rng = BulkRng(seed)
    img = _texture(rng, h, w)
    n_shapes = 2 + int(rng.uniforms(1)[0] * 4)  # 2..5
    kinds = ("rect", "ellipse", "blob")
    masks: list[np.ndarray] = []
    occupied = np.zeros((h, w), dtype=bool)
    tries = 0
    while len(masks) < n_shapes and tries < 60:
        tries += 1
        kind = kinds[int(rng.uniforms(1)[0] * 3) % 3]
        m = _shape_mask(rng, h, w, kind)
        if not m.any() or (m & occupied).any():
            continue
        masks.append(m)
        occupied |= m
        # tint the object so it is visually distinct from the texture
        color = 0.2 + 0.6 * rng.uniforms(3)
        img[m] = 0.35 * img[m] + 0.65 * color
    if len(masks) < 2:
        # fall back to two deterministic disjoint rectangles; tiny images only
        q = max(2, min(h, w) // 4)
        a = np.zeros((h, w), dtype=bool)
        a[1:1 + q, 1:1 + q] = True
        b = np.zeros((h, w), dtype=bool)
        b[h - 1 - q:h - 1, w - 1 - q:w - 1] = True
        b &= ~a
        masks = [a, b]
        for m, shade in ((a, 0.85), (b, 0.2)):
            img[m] = shade
    annotations = tuple(BinaryMask(m) for m in masks)
    return AnnotatedImage(
        id=image_id,
        image=ImageTensor(np.clip(img, 0.0, 1.0)),
        annotations=annotations,
    )


def synth_records(seed: int, n_images: int, h: int, w: int) -> list[AnnotatedImage]:
    master = DeterministicRng(seed)
    out = []
    for i in range(n_images):
        sub = master.next_u64()
        out.append(make_annotated_image(sub, f"synth-{i:04d}", h, w))
    return out


def synth_dataset(seed: int, n_images: int, size: tuple[int, int],
                  out_dir: str | os.PathLike) -> DatasetManifest:
    """Write images, masks, and manifest.json under out_dir; returns the manifest."""
    if n_images < 1:
        raise ValueError("n_images must be >= 1")
    h, w = size
    records = synth_records(seed, n_images, h, w)
    os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "masks"), exist_ok=True)
    manifest_records = []
    for rec in records:
        image_rel = os.path.join("images", f"{rec.id}.png")
        save_image_png(rec.image, os.path.join(out_dir, image_rel))
        entries = []
        for j, mask in enumerate(rec.annotations):
            mask_rel = os.path.join("masks", f"{rec.id}_{j}.png")
            save_mask_png(mask, os.path.join(out_dir, mask_rel))
            entries.append(MaskEntry(mask_path=mask_rel, area_px=mask.area))
        manifest_records.append(
            ManifestRecord(id=rec.id, image_path=image_rel, masks=tuple(entries))
        )
    manifest = DatasetManifest(version=1, records=tuple(manifest_records))
    save_manifest(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest
