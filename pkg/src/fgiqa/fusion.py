"""Score fusion and the end-to-end per-pair pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .colorspace import RgbImage, as_rgb, rgb_to_ycbcr
from .config import MetricConfig
from .errors import InvalidConfigError, InvalidInputError
from .gradient import PooledStats, gradient_features
from .texture import MIN_BANK_SIDE, texture_features


@dataclass(frozen=True)
class QualityScore:
    """Final score plus the pooled features it was fused from.

    Features of a disabled group are ``None``.
    """

    q: float
    e_g: float | None = None
    std_g: float | None = None
    e_t: float | None = None
    std_t: float | None = None


def _factor(stats: PooledStats, exponent: float, floor: float) -> float:
    return stats.mean**exponent / max(stats.std, floor) ** exponent


def fuse(grad: PooledStats | None, tex: PooledStats | None, cfg: MetricConfig | None = None) -> QualityScore:
    """Q = (E_g / Std_g)^alpha * (E_t / Std_t)^beta with both stds floored at ``std_floor``.

    A group that is disabled in ``cfg`` (or passed as None) contributes 1.
    """
    cfg = cfg or MetricConfig()
    if cfg.alpha < 0 or cfg.beta < 0:
        raise InvalidConfigError(f"alpha and beta must be non-negative, got ({cfg.alpha}, {cfg.beta})")
    use_g = cfg.use_gradient and grad is not None
    use_t = cfg.use_texture and tex is not None
    q = 1.0
    if use_g:
        q *= _factor(grad, cfg.alpha, cfg.std_floor)
    if use_t:
        q *= _factor(tex, cfg.beta, cfg.std_floor)
    return QualityScore(
        q=q,
        e_g=grad.mean if use_g else None,
        std_g=grad.std if use_g else None,
        e_t=tex.mean if use_t else None,
        std_t=tex.std if use_t else None,
    )


def pair_features(
    ref: RgbImage | np.ndarray, dis: RgbImage | np.ndarray, cfg: MetricConfig | None = None
) -> tuple[PooledStats | None, PooledStats | None]:
    cfg = cfg or MetricConfig()
    ref, dis = as_rgb(ref), as_rgb(dis)
    if ref.shape != dis.shape:
        raise InvalidInputError(f"image sizes differ: {ref.width}x{ref.height} vs {dis.width}x{dis.height}")
    if cfg.use_texture and min(ref.shape) < MIN_BANK_SIDE:
        raise InvalidInputError(f"texture features need images of at least {MIN_BANK_SIDE}x{MIN_BANK_SIDE}")
    ycc_ref, ycc_dis = rgb_to_ycbcr(ref), rgb_to_ycbcr(dis)
    grad = tex = None
    if cfg.use_gradient:
        grad = gradient_features(ycc_ref.y, ycc_dis.y, cfg.c1, cfg.use_gradient_region, cfg.sobel)
    if cfg.use_texture:
        tex = texture_features(ycc_ref, ycc_dis, cfg.texture, cfg.scale_toggles)
    return grad, tex


def score_pair(
    ref: RgbImage | np.ndarray, dis: RgbImage | np.ndarray, cfg: MetricConfig | None = None
) -> QualityScore:
    """Score a distorted image against its reference; higher is better."""
    cfg = cfg or MetricConfig()
    grad, tex = pair_features(ref, dis, cfg)
    return fuse(grad, tex, cfg)


def _pixels(img) -> np.ndarray:
    # No minimum size here, unlike RgbImage: PSNR is defined for any image.
    if isinstance(img, RgbImage):
        img = img.to_array()
    return np.asarray(img, dtype=np.float64)[..., :3]


def psnr(ref: RgbImage | np.ndarray, dis: RgbImage | np.ndarray) -> float:
    """PSNR in dB over all RGB channels; ``inf`` for identical images."""
    a = _pixels(ref)
    b = _pixels(dis)
    if a.shape != b.shape:
        raise InvalidInputError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)
