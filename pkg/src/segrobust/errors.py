"""Exception hierarchy shared by all segrobust modules."""


class SegRobustError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(SegRobustError):
    """Paired image/mask/field shapes disagree, or stored metadata contradicts decoded data."""


class EmptyMaskError(SegRobustError):
    """A mask with zero set pixels was used where a non-empty one is required."""


class ParseError(SegRobustError):
    """Malformed manifest or parameter file; message carries field/record context."""


class MissingFileError(SegRobustError):
    """A referenced path does not resolve to a file."""


class DegenerateClassError(SegRobustError):
    """Ground truth has an empty foreground or background class."""


class EmptyPredictionListError(SegRobustError):
    """Metric maximum requested over zero candidate masks."""


class EmptyDatasetError(SegRobustError):
    """Aggregate requested over zero evaluation records."""


class UnknownKindError(SegRobustError):
    """Corruption kind outside the fixed 15-member set."""


class SeverityOutOfRangeError(SegRobustError):
    """Corruption severity outside 1..5."""


class KernelLargerThanImageError(SegRobustError):
    """A blur kernel does not fit inside the image."""


class ShapeMismatchError(SegRobustError):
    """Loss/gradient operands have incompatible shapes."""


class StepOutOfRangeError(SegRobustError):
    """Iterative-attack step index outside 1..total_steps."""


class ConfigInvalidError(SegRobustError):
    """Attack or run configuration violates its invariants."""


class ModelError(SegRobustError):
    """A segmenter failed or violated its output contract."""


class NonFiniteGradientError(ModelError):
    """A segmenter returned NaN/Inf gradients."""


class ProtocolError(SegRobustError):
    """Malformed frame or schema violation on the model wire protocol."""


class RemoteError(SegRobustError):
    """The remote model reported a failure; message preserved verbatim."""


class RemoteTimeoutError(SegRobustError):
    """The remote model did not answer within the configured deadline."""
