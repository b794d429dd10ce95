from .imageio import (
    load_image_png,
    load_mask_png,
    quantize_unit_to_u8,
    save_image_png,
    save_mask_png,
)
from .manifest import (
    MANIFEST_VERSION,
    DatasetManifest,
    ManifestRecord,
    MaskEntry,
    load_annotated_images,
    load_manifest,
    manifest_from_json_obj,
    save_manifest,
)
from .rng import BulkRng, DeterministicRng, splitmix64_array
from .types import (
    AnnotatedImage,
    BinaryMask,
    BoxPrompt,
    ImageTensor,
    PointPrompt,
    sample_point_in_mask,
)

__all__ = [
    "AnnotatedImage",
    "BinaryMask",
    "BoxPrompt",
    "BulkRng",
    "DatasetManifest",
    "DeterministicRng",
    "ImageTensor",
    "MANIFEST_VERSION",
    "ManifestRecord",
    "MaskEntry",
    "PointPrompt",
    "load_annotated_images",
    "load_image_png",
    "load_manifest",
    "load_mask_png",
    "manifest_from_json_obj",
    "quantize_unit_to_u8",
    "sample_point_in_mask",
    "save_image_png",
    "save_manifest",
    "save_mask_png",
    "splitmix64_array",
]
