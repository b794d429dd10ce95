"""segrobust: robustness evaluation for point-prompted image segmentation.

Generates common-corruption and L-inf adversarial variants of annotated
images, runs a promptable segmenter over them, and reports foreground /
background pixel-accuracy and IoU statistics.
"""

__version__ = "0.1.0"

from .core import (
    AnnotatedImage,
    BinaryMask,
    BoxPrompt,
    DatasetManifest,
    DeterministicRng,
    ImageTensor,
    PointPrompt,
    load_manifest,
    sample_point_in_mask,
    save_manifest,
)
from .corruptions import CorruptionParamTable, CorruptionSpec, apply_corruption, severity_profile
from .losses import LossSpec, PredictionField, composite_loss, dice_loss, focal_loss
from .metrics import EvalRecord, PixelCounts, class_metrics, confusion, dataset_mean
from .attacks import AttackConfig, attack_sweep, fgsm, iterative_attack, project_linf, run_attack
from .model import GtEchoSegmenter, RemoteSegmenter, SegmenterContract, ToyBlobNet, build_model
from .harness import RunConfig, evaluate_dataset, evaluate_image, synth_dataset

__all__ = [
    "AnnotatedImage",
    "AttackConfig",
    "BinaryMask",
    "BoxPrompt",
    "CorruptionParamTable",
    "CorruptionSpec",
    "DatasetManifest",
    "DeterministicRng",
    "EvalRecord",
    "GtEchoSegmenter",
    "ImageTensor",
    "LossSpec",
    "PixelCounts",
    "PointPrompt",
    "PredictionField",
    "RemoteSegmenter",
    "RunConfig",
    "SegmenterContract",
    "ToyBlobNet",
    "apply_corruption",
    "attack_sweep",
    "build_model",
    "class_metrics",
    "composite_loss",
    "confusion",
    "dataset_mean",
    "dice_loss",
    "evaluate_dataset",
    "evaluate_image",
    "fgsm",
    "focal_loss",
    "iterative_attack",
    "load_manifest",
    "project_linf",
    "run_attack",
    "sample_point_in_mask",
    "save_manifest",
    "severity_profile",
    "synth_dataset",
]
