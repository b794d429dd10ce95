"""Value types shared across the toolkit: images, masks, prompts, annotations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatchError, EmptyMaskError
from .rng import DeterministicRng


@dataclass(frozen=True)
class ImageTensor:
    """H x W x 3 image, float64 in [0,1], row-major, channel-interleaved RGB."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 3 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionMismatchError(f"image must be HxWx3 with H,W >= 1, got {a.shape}")
        if not np.isfinite(a).all():
            raise ValueError("image contains non-finite values")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("image values outside [0,1]")
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """H x W boolean map; unit of both ground truth and prediction."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.dtype != np.bool_:
            a = a.astype(bool)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionMismatchError(f"mask must be HxW with H,W >= 1, got {a.shape}")
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def area(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class PointPrompt:
    """Pixel coordinate (x = column, y = row) designating the object to segment."""

    x: int
    y: int

    def check_within(self, height: int, width: int) -> None:
        if not (0 <= self.x < width and 0 <= self.y < height):
            raise DimensionMismatchError(
                f"point ({self.x},{self.y}) outside {height}x{width} image"
            )


@dataclass(frozen=True)
class BoxPrompt:
    """Axis-aligned box prompt; typed for contract completeness, unused by the harness."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("box requires x0 < x1 and y0 < y1")

    def check_within(self, height: int, width: int) -> None:
        if not (0 <= self.x0 and self.x1 <= width and 0 <= self.y0 and self.y1 <= height):
            raise DimensionMismatchError(f"box outside {height}x{width} image")


@dataclass(frozen=True)
class AnnotatedImage:
    """An image with its ground-truth masks; mask indices are stable and areas cached."""

    id: str
    image: ImageTensor
    annotations: tuple[BinaryMask, ...]
    areas: tuple[int, ...] = field(default=())

    def __post_init__(self):
        anns = tuple(self.annotations)
        for i, m in enumerate(anns):
            if (m.height, m.width) != (self.image.height, self.image.width):
                raise DimensionMismatchError(
                    f"annotation {i} is {m.height}x{m.width}, image is "
                    f"{self.image.height}x{self.image.width}"
                )
            if m.area == 0:
                raise EmptyMaskError(f"annotation {i} of {self.id!r} is empty")
        object.__setattr__(self, "annotations", anns)
        object.__setattr__(self, "areas", tuple(m.area for m in anns))


def sample_point_in_mask(mask: BinaryMask, rng: DeterministicRng) -> PointPrompt:
    """Uniform draw among set pixels: index = next_u64 mod popcount over the
    row-major enumeration of set pixels."""
    n = mask.area
    if n == 0:
        raise EmptyMaskError("cannot sample a point from an empty mask")
    idx = rng.next_below(n)
    ys, xs = np.nonzero(mask.data)  # nonzero scans row-major
    return PointPrompt(x=int(xs[idx]), y=int(ys[idx]))
