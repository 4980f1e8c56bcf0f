"""Gradient-magnitude similarity features restricted to artifact-prone regions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError, InvalidInputError

SOBEL_X = np.array(
    [
        [-0.25, 0.0, 0.25],
        [-0.5, 0.0, 0.5],
        [-0.25, 0.0, 0.25],
    ]
)
SOBEL_Y = SOBEL_X.T.copy()

# The matrices exactly as printed alongside the method; they are not
# derivative operators and are kept only for side-by-side comparison.
SOBEL_X_VERBATIM = np.array(
    [
        [-0.25, 0.0, -0.25],
        [-0.5, 0.0, -0.5],
        [-0.25, 0.0, -0.25],
    ]
)
SOBEL_Y_VERBATIM = SOBEL_X_VERBATIM.T.copy()


@dataclass(frozen=True)
class GradientPair:
    g_ref: np.ndarray
    g_dis: np.ndarray

    def __post_init__(self):
        if self.g_ref.shape != self.g_dis.shape:
            raise InvalidInputError(f"gradient maps differ in shape: {self.g_ref.shape} vs {self.g_dis.shape}")
        if self.g_ref.size == 0:
            raise InvalidInputError("gradient maps are empty")


@dataclass(frozen=True)
class RegionMask:
    mask: np.ndarray
    count: int

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> RegionMask:
        mask = np.asarray(mask, dtype=bool)
        return cls(mask, int(np.count_nonzero(mask)))

    @classmethod
    def full(cls, shape) -> RegionMask:
        return cls.from_mask(np.ones(shape, dtype=bool))


@dataclass(frozen=True)
class PooledStats:
    mean: float
    std: float


def _kernels(mode: str):
    if mode == "standard":
        return SOBEL_X, SOBEL_Y
    if mode == "verbatim":
        return SOBEL_X_VERBATIM, SOBEL_Y_VERBATIM
    raise InvalidConfigError(f"unknown sobel mode {mode!r}")


def _filter3x3(padded: np.ndarray, kernel: np.ndarray, shape) -> np.ndarray:
    # Correlation; for the antisymmetric kernels this only flips the sign,
    # which the magnitude discards.
    h, w = shape
    out = np.zeros(shape)
    for di in range(3):
        for dj in range(3):
            k = kernel[di, dj]
            if k != 0.0:
                out += k * padded[di : di + h, dj : dj + w]
    return out


def sobel_magnitude(y: np.ndarray, mode: str = "standard") -> np.ndarray:
    """Gradient magnitude with replicate-edge padding; output matches input shape."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or min(y.shape) < 3:
        raise InvalidInputError(f"plane must be 2-D and at least 3x3, got shape {y.shape}")
    kx, ky = _kernels(mode)
    padded = np.pad(y, 1, mode="edge")
    gx = _filter3x3(padded, kx, y.shape)
    gy = _filter3x3(padded, ky, y.shape)
    return np.hypot(gx, gy)


def gradient_similarity(g: GradientPair, c1: float) -> np.ndarray:
    if not c1 > 0:
        raise InvalidConfigError(f"c1 must be positive, got {c1}")
    gr, gd = g.g_ref, g.g_dis
    return (2.0 * gr * gd + c1) / (gr * gr + gd * gd + c1)


def region_mask(g: GradientPair) -> RegionMask:
    """Union of the high-gradient area and the low-gradient over-growth area.

    A pixel is high-gradient when either magnitude exceeds its own plane
    mean. It is an over-growth pixel when the distorted-minus-reference
    difference exceeds its mean while the reference magnitude stays below
    its mean. All comparisons are strict.
    """
    gr, gd = g.g_ref, g.g_dis
    diff = gd - gr
    high = (gr > gr.mean()) | (gd > gd.mean())
    overgrowth = (diff > diff.mean()) & (gr < gr.mean())
    return RegionMask.from_mask(high | overgrowth)


def masked_stats(sim: np.ndarray, mask: RegionMask) -> PooledStats:
    """Population mean/std over masked pixels; an empty mask pools everything."""
    sim = np.asarray(sim, dtype=np.float64)
    if mask.mask.shape != sim.shape:
        raise InvalidInputError(f"mask shape {mask.mask.shape} does not match map shape {sim.shape}")
    values = sim[mask.mask] if mask.count > 0 else sim.ravel()
    return pooled_stats(values)


def pooled_stats(values: np.ndarray) -> PooledStats:
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise InvalidInputError("cannot pool an empty map")
    lo, hi = values.min(), values.max()
    if lo == hi:
        # Summation roundoff would otherwise leave a tiny non-zero std.
        return PooledStats(float(lo), 0.0)
    mean = float(values.mean())
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    return PooledStats(mean, std)


def gradient_features(
    y_ref: np.ndarray,
    y_dis: np.ndarray,
    c1: float = 170.0,
    use_region: bool = True,
    sobel: str = "standard",
) -> PooledStats:
    y_ref = np.asarray(y_ref, dtype=np.float64)
    y_dis = np.asarray(y_dis, dtype=np.float64)
    if y_ref.shape != y_dis.shape:
        raise InvalidInputError(f"luminance planes differ in shape: {y_ref.shape} vs {y_dis.shape}")
    pair = GradientPair(sobel_magnitude(y_ref, sobel), sobel_magnitude(y_dis, sobel))
    sim = gradient_similarity(pair, c1)
    mask = region_mask(pair) if use_region else RegionMask.full(sim.shape)
    return masked_stats(sim, mask)
