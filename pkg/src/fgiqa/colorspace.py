"""RGB to YCbCr conversion used as the metric's preprocessing step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Rows produce Y, Cb, Cr; columns multiply R, G, B.
YCBCR_MATRIX = np.array(
    [
        [0.257, 0.564, 0.098],
        [-0.148, -0.291, 0.439],
        [0.439, -0.368, -0.071],
    ]
)
YCBCR_OFFSET = np.array([16.0, 128.0, 128.0])

MIN_SIDE = 3


@dataclass(frozen=True)
class RgbImage:
    """Three equally sized channels holding values on the 0..255 scale."""

    r: np.ndarray
    g: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(self.r), np.shape(self.g), np.shape(self.b)}
        if len(shapes) != 1:
            raise InvalidInputError(f"RGB channels differ in shape: {sorted(shapes)}")
        shape = shapes.pop()
        if len(shape) != 2:
            raise InvalidInputError(f"RGB channels must be 2-D, got shape {shape}")
        if min(shape) < MIN_SIDE:
            raise InvalidInputError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {shape[1]}x{shape[0]}")

    @classmethod
    def from_array(cls, arr) -> RgbImage:
        """Build from an (H, W, 3) or (H, W, 4) array; alpha is dropped."""
        arr = np.asarray(arr)
        if arr.ndim != 3 or arr.shape[2] not in (3, 4):
            raise InvalidInputError(f"expected an (H, W, 3) array, got shape {arr.shape}")
        return cls(arr[..., 0], arr[..., 1], arr[..., 2])

    @property
    def width(self) -> int:
        return int(np.shape(self.r)[1])

    @property
    def height(self) -> int:
        return int(np.shape(self.r)[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def to_array(self) -> np.ndarray:
        return np.stack([self.r, self.g, self.b], axis=-1)


@dataclass(frozen=True)
class YcbcrImage:
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    @property
    def width(self) -> int:
        return int(self.y.shape[1])

    @property
    def height(self) -> int:
        return int(self.y.shape[0])

    @property
    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.y, self.cb, self.cr)


def as_rgb(img) -> RgbImage:
    if isinstance(img, RgbImage):
        return img
    return RgbImage.from_array(img)


def rgb_to_ycbcr(img: RgbImage | np.ndarray) -> YcbcrImage:
    """Affine RGB -> YCbCr conversion in float64, without rounding or clipping."""
    img = as_rgb(img)
    r = np.asarray(img.r, dtype=np.float64)
    g = np.asarray(img.g, dtype=np.float64)
    b = np.asarray(img.b, dtype=np.float64)
    m, off = YCBCR_MATRIX, YCBCR_OFFSET
    y = m[0, 0] * r + m[0, 1] * g + m[0, 2] * b + off[0]
    cb = m[1, 0] * r + m[1, 1] * g + m[1, 2] * b + off[1]
    cr = m[2, 0] * r + m[2, 1] * g + m[2, 2] * b + off[2]
    return YcbcrImage(y, cb, cr)
