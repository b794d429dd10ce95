"""The evaluation protocol: sample a mask and a point, transform, predict, score.

The same sampled (mask, point) pair is reused across every condition of one
image so clean/corruption/attack rows are paired. Per-image substreams derive
from the master seed in manifest order, which makes results independent of
worker count and scheduling.
"""

from __future__ import annotations

import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from ..attacks import run_attack
from ..core.imageio import quantize_unit_to_u8
from ..core.manifest import load_annotated_images, load_manifest
from ..core.rng import DeterministicRng, splitmix64_array
from ..core.types import AnnotatedImage, BinaryMask, ImageTensor, PointPrompt, sample_point_in_mask
from ..corruptions import CorruptionParamTable, apply_corruption
from ..metrics import EvalRecord, best_over_masks, dataset_mean
from ..model.contract import SegmenterContract, validate_predictions
from ..model.remote import build_model
from .config import Condition, RunConfig

log = logging.getLogger("segrobust.harness")


def big_small_filter(record: AnnotatedImage, mode: str) -> list[tuple[int, BinaryMask]]:
    """Area partition: big keeps the top ceil(n/2), small the rest; ties by index."""
    indexed = list(enumerate(record.annotations))
    if mode == "off":
        return indexed
    by_area = sorted(indexed, key=lambda t: (-record.areas[t[0]], t[0]))
    cut = math.ceil(len(by_area) / 2)
    return by_area[:cut] if mode == "big" else by_area[cut:]


@dataclass(frozen=True)
class SampledPrompt:
    annotation_index: int
    mask: BinaryMask
    point: PointPrompt
    branch_seed: int


def sample_prompt(record: AnnotatedImage, split: str,
                  rng: DeterministicRng) -> SampledPrompt | None:
    """Draw order is fixed: mask choice, point, then the condition branch seed."""
    candidates = big_small_filter(record, split)
    if not candidates:
        return None
    pick = rng.next_below(len(candidates))
    index, mask = candidates[pick]
    point = sample_point_in_mask(mask, rng)
    return SampledPrompt(annotation_index=index, mask=mask, point=point,
                         branch_seed=rng.next_u64())


def condition_seed(branch_seed: int, condition_ordinal: int) -> int:
    return int(splitmix64_array(branch_seed, 1, offset=condition_ordinal)[0])


def _transformed_image(record: AnnotatedImage, sampled: SampledPrompt,
                       condition: Condition, seed: int,
                       model: SegmenterContract,
                       table: CorruptionParamTable) -> ImageTensor:
    if condition.kind == "clean":
        return record.image
    if condition.kind == "corruption":
        spec = replace(condition.corruption, seed=seed)
        return apply_corruption(record.image, spec, table)
    cfg = replace(condition.attack, seed=seed)
    return run_attack(record.image, sampled.point, sampled.mask, model, cfg)


def _quantize_roundtrip(image: ImageTensor) -> ImageTensor:
    return ImageTensor(quantize_unit_to_u8(image.data).astype(float) / 255.0)


def evaluate_image(record: AnnotatedImage, model: SegmenterContract,
                   condition: Condition, rng: DeterministicRng, *,
                   table: CorruptionParamTable | None = None,
                   split: str = "off",
                   condition_ordinal: int = 0) -> EvalRecord | None:
    """One image, one condition. Returns None when the split leaves no mask."""
    table = table if table is not None else CorruptionParamTable.default()
    sampled = sample_prompt(record, split, rng)
    if sampled is None:
        log.info("skipping %s: split %r leaves no annotation", record.id, split)
        return None
    seed = condition_seed(sampled.branch_seed, condition_ordinal)
    image = _transformed_image(record, sampled, condition, seed, model, table)
    preds = model.predict(image, sampled.point)
    validate_predictions(preds, image)
    return best_over_masks([p.mask for p in preds], sampled.mask,
                           image_id=record.id, condition=condition.tag())


@dataclass(frozen=True)
class RecordResult:
    rows: tuple
    point_violations: int  # predictions whose mask excludes the prompt (recorded, not fatal)


def evaluate_record_all_conditions(
    record: AnnotatedImage,
    model: SegmenterContract,
    conditions,
    image_seed: int,
    *,
    table: CorruptionParamTable,
    split: str,
    quantized_attack_rows: bool,
    overlay_sink=None,
) -> RecordResult:
    """All conditions of one image against one sampled (mask, point) pair."""
    rng = DeterministicRng(image_seed)
    sampled = sample_prompt(record, split, rng)
    if sampled is None:
        log.info("skipping %s: split %r leaves no annotation", record.id, split)
        return RecordResult(rows=(), point_violations=0)
    out = []
    violations = 0

    def score(preds, image, tag):
        nonlocal violations
        validate_predictions(preds, image)
        violations += sum(1 for p in preds
                          if not p.mask.data[sampled.point.y, sampled.point.x])
        return best_over_masks([p.mask for p in preds], sampled.mask,
                               image_id=record.id, condition=tag)

    for ordinal, condition in enumerate(conditions):
        seed = condition_seed(sampled.branch_seed, ordinal)
        image = _transformed_image(record, sampled, condition, seed, model, table)
        preds = model.predict(image, sampled.point)
        rec = score(preds, image, condition.tag())
        out.append(rec)
        if overlay_sink is not None:
            overlay_sink(record, condition.tag(), image, sampled, preds, rec)
        if condition.kind == "attack" and quantized_attack_rows:
            q_image = _quantize_roundtrip(image)
            q_preds = model.predict(q_image, sampled.point)
            out.append(score(q_preds, q_image, condition.tag() + "+q8"))
    return RecordResult(rows=tuple(out), point_violations=violations)


@dataclass
class ReportBundle:
    aggregates: dict
    per_image: list
    provenance: dict

    def condition_tags(self) -> list[str]:
        return list(self.aggregates.keys())


class _ModelPool:
    """One model per worker thread unless the backend is concurrent-safe."""

    def __init__(self, selector: str, instance: SegmenterContract | None = None):
        self._selector = selector
        self._local = threading.local()
        probe = instance if instance is not None else build_model(selector)
        self._instance = instance
        self._shared = probe if probe.descriptor().concurrent_safe else None
        if self._shared is None:
            self._local.model = probe

    def get(self) -> SegmenterContract:
        if self._shared is not None:
            return self._shared
        model = getattr(self._local, "model", None)
        if model is None:
            if self._instance is not None:
                model = self._instance  # injected non-concurrent models stay single
            else:
                model = build_model(self._selector)
            self._local.model = model
        return model

    def descriptor(self):
        return (self._shared or self.get()).descriptor()


def evaluate_dataset(config: RunConfig, *, base_dir: str = ".",
                     table: CorruptionParamTable | None = None,
                     overlay_sink=None,
                     model: SegmenterContract | None = None) -> ReportBundle:
    """Run the full grid and aggregate; deterministic for any worker count.

    An explicit model instance overrides the config selector (test doubles)."""
    table = table if table is not None else CorruptionParamTable.default()
    manifest = load_manifest(config.manifest_path)
    manifest_dir = os.path.dirname(os.path.abspath(config.manifest_path))
    records = load_annotated_images(manifest, base_dir=manifest_dir)

    master = DeterministicRng(config.master_seed)
    image_seeds = [master.next_u64() for _ in records]

    pool = _ModelPool(config.model, instance=model)

    def work(i: int) -> RecordResult:
        return evaluate_record_all_conditions(
            records[i], pool.get(), config.conditions, image_seeds[i],
            table=table, split=config.split,
            quantized_attack_rows=config.quantized_attack_rows,
            overlay_sink=overlay_sink,
        )

    if config.workers == 1:
        results = [work(i) for i in range(len(records))]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as ex:
            results = list(ex.map(work, range(len(records))))

    per_image: list[EvalRecord] = []
    skipped = []
    point_violations = 0
    for rec, result in zip(records, results):
        if not result.rows:
            skipped.append(rec.id)
        per_image.extend(result.rows)
        point_violations += result.point_violations

    by_tag: dict[str, list[EvalRecord]] = {}
    for row in per_image:
        by_tag.setdefault(row.condition, []).append(row)
    aggregates = {tag: dataset_mean(rows, condition=tag) for tag, rows in by_tag.items()}

    provenance = {
        "master_seed": config.master_seed,
        "model": pool.descriptor().name,
        "config_digest": config.digest(),
        "split": config.split,
        "n_images": len(records) - len(skipped),
        "skipped": skipped,
        "point_violations": point_violations,
        "toolkit": "segrobust-0.1.0",
    }
    return ReportBundle(aggregates=aggregates, per_image=per_image, provenance=provenance)
