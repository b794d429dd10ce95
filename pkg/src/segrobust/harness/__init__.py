from .config import (
    Condition,
    RunConfig,
    attack_conditions,
    clean_condition,
    conditions_from_json_obj,
    corruption_conditions,
    load_conditions,
)
from .evaluate import (
    ReportBundle,
    big_small_filter,
    evaluate_dataset,
    evaluate_image,
    evaluate_record_all_conditions,
    sample_prompt,
)
from .report import (
    bundle_from_json_obj,
    bundle_to_canonical_json,
    emit_report,
    load_report,
    overlay_png_sink,
    verify_bundle,
)
from .synth import make_annotated_image, synth_dataset, synth_records

__all__ = [
    "Condition",
    "ReportBundle",
    "RunConfig",
    "attack_conditions",
    "big_small_filter",
    "bundle_from_json_obj",
    "bundle_to_canonical_json",
    "clean_condition",
    "conditions_from_json_obj",
    "corruption_conditions",
    "emit_report",
    "evaluate_dataset",
    "evaluate_image",
    "evaluate_record_all_conditions",
    "load_conditions",
    "load_report",
    "make_annotated_image",
    "overlay_png_sink",
    "sample_prompt",
    "synth_dataset",
    "synth_records",
    "verify_bundle",
]
