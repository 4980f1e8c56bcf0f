"""Full-reference quality metric for fine-grained compressed images.

Gradient similarity in compression-sensitive regions is fused with a
Log-Gabor texture similarity over Y, Cb and Cr into one score ``Q``.
"""

__version__ = "0.1.0"

from .colorspace import RgbImage, YcbcrImage, rgb_to_ycbcr
from .config import MetricConfig, TextureConfig, apply_ablation, load_config
from .errors import FgiqaError, InvalidConfigError, InvalidInputError
from .evaluation import evaluate_groups, kendall, logistic_fit, pearson, spearman
from .fusion import QualityScore, fuse, psnr, score_pair
from .gradient import PooledStats, gradient_features
from .texture import build_bank, texture_features

__all__ = [
    "FgiqaError",
    "InvalidConfigError",
    "InvalidInputError",
    "MetricConfig",
    "PooledStats",
    "QualityScore",
    "RgbImage",
    "TextureConfig",
    "YcbcrImage",
    "apply_ablation",
    "build_bank",
    "evaluate_groups",
    "fuse",
    "gradient_features",
    "kendall",
    "load_config",
    "logistic_fit",
    "pearson",
    "psnr",
    "rgb_to_ycbcr",
    "score_pair",
    "spearman",
    "texture_features",
]
