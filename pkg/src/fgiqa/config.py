"""Metric configuration objects, JSON loading and ablation presets."""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import InvalidConfigError

CONFIG_ENV_VAR = "FGIQA_CONFIG"
DEFAULT_CONFIG_PATH = Path(__file__).with_name("default_config.json")

SOBEL_MODES = ("standard", "verbatim")
ABLATION_PRESETS = ("G1", "G2", "G3", "G4", "G5", "G6", "G7", "G8", "G9")


@dataclass(frozen=True)
class TextureConfig:
    """Log-Gabor bank and texture-similarity parameters.

    Frequencies are in normalized cycles/pixel, angles in radians. The
    dataclass is frozen and hashable so it can key the filter-bank cache.
    """

    f0: float = 0.147
    scale_multipliers: tuple[float, ...] = (2 / 3, 4 / 3, 2.0, 8 / 3, 10 / 3)
    orientations: tuple[float, ...] = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)
    sigma_f_ratio: float = 0.598
    sigma_theta: float = math.pi / 8
    w_ga: tuple[float, ...] = (0.5, 0.75, 1.0, 5.0, 6.0)
    w_y: float = 1.0
    w_cb: float = 0.25
    w_cr: float = 0.25
    c2: float = 100.0
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scale_multipliers", tuple(float(m) for m in self.scale_multipliers))
        object.__setattr__(self, "orientations", tuple(float(o) for o in self.orientations))
        object.__setattr__(self, "w_ga", tuple(float(w) for w in self.w_ga))
        self.validate()

    @property
    def n_scales(self) -> int:
        return len(self.scale_multipliers)

    @property
    def n_orientations(self) -> int:
        return len(self.orientations)

    @property
    def center_frequencies(self) -> tuple[float, ...]:
        return tuple(self.f0 * m for m in self.scale_multipliers)

    def validate(self) -> None:
        if not self.scale_multipliers or not self.orientations:
            raise InvalidConfigError("texture bank needs at least one scale and one orientation")
        if self.f0 <= 0:
            raise InvalidConfigError(f"f0 must be positive, got {self.f0}")
        if any(b <= a for a, b in zip(self.scale_multipliers, self.scale_multipliers[1:])):
            raise InvalidConfigError("scale_multipliers must be strictly increasing")
        if self.scale_multipliers[0] <= 0:
            raise InvalidConfigError("scale_multipliers must be positive")
        top = self.f0 * self.scale_multipliers[-1]
        if top > 0.5 + 1e-12:
            raise InvalidConfigError(f"highest band center {top:.4g} lies above Nyquist (0.5)")
        if not 0 < self.sigma_f_ratio < 1:
            raise InvalidConfigError(f"sigma_f_ratio must lie in (0, 1), got {self.sigma_f_ratio}")
        if self.sigma_theta <= 0:
            raise InvalidConfigError(f"sigma_theta must be positive, got {self.sigma_theta}")
        if len(self.w_ga) != len(self.scale_multipliers):
            raise InvalidConfigError("w_ga needs one weight per scale")
        if any(w < 0 for w in self.w_ga) or min(self.w_y, self.w_cb, self.w_cr) < 0:
            raise InvalidConfigError("texture weights must be non-negative")
        if self.c2 <= 0:
            raise InvalidConfigError(f"c2 must be positive, got {self.c2}")


@dataclass(frozen=True)
class MetricConfig:
    c1: float = 170.0
    texture: TextureConfig = field(default_factory=TextureConfig)
    alpha: float = 0.1
    beta: float = 0.6
    std_floor: float = 1e-6
    use_gradient: bool = True
    use_gradient_region: bool = True
    use_texture: bool = True
    scale_toggles: tuple[bool, ...] = (True, True, True, True, True)
    sobel: str = "standard"

    def __post_init__(self):
        object.__setattr__(self, "scale_toggles", tuple(bool(t) for t in self.scale_toggles))
        self.validate()

    def validate(self) -> None:
        if self.c1 <= 0:
            raise InvalidConfigError(f"c1 must be positive, got {self.c1}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidConfigError(f"alpha and beta must be non-negative, got ({self.alpha}, {self.beta})")
        if self.std_floor <= 0:
            raise InvalidConfigError(f"std_floor must be positive, got {self.std_floor}")
        if len(self.scale_toggles) != self.texture.n_scales:
            raise InvalidConfigError("scale_toggles needs one flag per texture scale")
        if self.use_texture and not any(self.scale_toggles):
            raise InvalidConfigError("texture features enabled but every scale is disabled")
        if self.sobel not in SOBEL_MODES:
            raise InvalidConfigError(f"sobel must be one of {SOBEL_MODES}, got {self.sobel!r}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base: MetricConfig | None = None) -> MetricConfig:
        """Overlay ``data`` onto ``base`` (defaults when omitted).

        Keys starting with an underscore are documentation and are skipped.
        Unknown keys raise :class:`InvalidConfigError`.
        """
        base = base or cls()
        data = {k: v for k, v in data.items() if not k.startswith("_")}
        tex_data = data.pop("texture", None) or {}
        tex_data = {k: v for k, v in tex_data.items() if not k.startswith("_")}
        try:
            texture = dataclasses.replace(base.texture, **tex_data)
            return dataclasses.replace(base, texture=texture, **data)
        except TypeError as exc:
            raise InvalidConfigError(f"unknown configuration key: {exc}") from None


def apply_ablation(cfg: MetricConfig, preset: str) -> MetricConfig:
    """Return ``cfg`` with one of the G1..G9 feature-removal presets applied.

    G1 drops gradient features, G2 drops the gradient region selection, G3
    drops texture features, G4..G8 drop texture scale 1..5, G9 keeps all.
    """
    preset = preset.upper()
    if preset not in ABLATION_PRESETS:
        raise InvalidConfigError(f"unknown ablation preset {preset!r}")
    all_on = (True,) * cfg.texture.n_scales
    full = dataclasses.replace(
        cfg, use_gradient=True, use_gradient_region=True, use_texture=True, scale_toggles=all_on
    )
    if preset == "G1":
        return dataclasses.replace(full, use_gradient=False)
    if preset == "G2":
        return dataclasses.replace(full, use_gradient_region=False)
    if preset == "G3":
        return dataclasses.replace(full, use_texture=False)
    if preset == "G9":
        return full
    scale = int(preset[1]) - 4
    toggles = tuple(i != scale for i in range(cfg.texture.n_scales))
    return dataclasses.replace(full, scale_toggles=toggles)


def load_config(path: str | os.PathLike | None = None) -> MetricConfig:
    """Load a JSON config file over the built-in defaults.

    When ``path`` is None the ``FGIQA_CONFIG`` environment variable is
    consulted; with neither set the defaults are returned.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return MetricConfig()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidConfigError(f"{path}: top-level JSON value must be an object")
    return MetricConfig.from_dict(data)
