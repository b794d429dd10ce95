from .contract import (
    MaskPrediction,
    SegmenterContract,
    SegmenterDescriptor,
    select_mask_index,
    validate_predictions,
)
from .echo import GtEchoSegmenter
from .gradcheck import gradient_check, relative_gradient_error
from .remote import RemoteSegmenter, build_model, connect_tcp, spawn_stdio
from .toy import ToyBlobNet

__all__ = [
    "GtEchoSegmenter",
    "MaskPrediction",
    "RemoteSegmenter",
    "SegmenterContract",
    "SegmenterDescriptor",
    "ToyBlobNet",
    "build_model",
    "connect_tcp",
    "gradient_check",
    "relative_gradient_error",
    "select_mask_index",
    "spawn_stdio",
    "validate_predictions",
]
