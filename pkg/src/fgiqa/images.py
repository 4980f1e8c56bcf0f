"""Lossless image decoding into :class:`RgbImage`."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .colorspace import RgbImage
from .errors import InvalidInputError

LOSSLESS_FORMATS = {"PNG", "BMP", "PPM"}
_HIGH_DEPTH_MODES = {"I", "I;16", "I;16L", "I;16B", "I;16N"}


def load_image(path: str | os.PathLike) -> RgbImage:
    """Decode a PNG/BMP/PPM file onto the 0..255 scale.

    Alpha is dropped, grayscale is replicated into three channels and
    16-bit data is rescaled to 0..255 reals.
    """
    try:
        with Image.open(path) as im:
            fmt = im.format
            if fmt not in LOSSLESS_FORMATS:
                raise InvalidInputError(f"{path}: unsupported format {fmt}; expected PNG, BMP or PPM")
            im.load()
            arr = _to_array(im)
    except (OSError, Image.DecompressionBombError) as exc:
        raise InvalidInputError(f"{path}: cannot decode image ({exc})") from None
    return RgbImage.from_array(arr)


def _to_array(im: Image.Image) -> np.ndarray:
    if im.mode in _HIGH_DEPTH_MODES:
        gray = np.asarray(im, dtype=np.float64) * (255.0 / 65535.0)
        return np.repeat(gray[..., None], 3, axis=2)
    if im.mode == "F":
        raise InvalidInputError("floating-point images are not supported")
    if im.mode != "RGB":
        im = im.convert("RGB")
    return np.asarray(im, dtype=np.uint8)


def save_image(arr: np.ndarray, path: str | os.PathLike) -> None:
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path)
