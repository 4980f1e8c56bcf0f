"""Log-Gabor texture similarity over the Y, Cb and Cr channels."""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Sequence

import numpy as np
from scipy import fft as sp_fft

from .colorspace import YcbcrImage
from .config import TextureConfig
from .errors import InvalidConfigError, InvalidInputError
from .gradient import PooledStats, pooled_stats

CHANNELS = ("Y", "Cb", "Cr")
MIN_BANK_SIDE = 8

DUMP_MAGIC = b"LGBK"
DUMP_HEADER = struct.Struct("<4sIIHH")


@dataclass(frozen=True)
class LogGaborBank:
    """Frequency-domain gains, ``gains[s, o]`` laid out like ``np.fft.fft2`` output."""

    gains: np.ndarray
    width: int
    height: int
    config: TextureConfig

    def gain(self, scale: int, orientation: int) -> np.ndarray:
        """Gain plane for 1-based ``scale`` and ``orientation`` indices."""
        return self.gains[scale - 1, orientation - 1]


@dataclass(frozen=True)
class AmplitudeSet:
    """Amplitude maps of one channel, ``amps[k, o]`` for scale ``scales[k]`` (0-based)."""

    amps: np.ndarray
    channel: str
    scales: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.amps.shape[-2:]


def frequency_grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized (fx, fy) for every DFT bin, shape (height, width).

    Bin u maps to u/W for u <= W/2 and to (u - W)/W above, so for even
    sizes the Nyquist bin carries +0.5.
    """
    u = np.arange(width)
    v = np.arange(height)
    fx = np.where(u <= width / 2, u, u - width) / width
    fy = np.where(v <= height / 2, v, v - height) / height
    return np.meshgrid(fx, fy)


def _angular_distance(theta: np.ndarray, center: float) -> np.ndarray:
    # Orientation distance: period pi, folded into [-pi/2, pi/2).
    return np.mod(theta - center + np.pi / 2, np.pi) - np.pi / 2


def _build_bank(width: int, height: int, cfg: TextureConfig) -> LogGaborBank:
    if width < MIN_BANK_SIDE or height < MIN_BANK_SIDE:
        raise InvalidInputError(f"texture bank needs at least {MIN_BANK_SIDE}x{MIN_BANK_SIDE}, got {width}x{height}")
    cfg.validate()
    fx, fy = frequency_grid(width, height)
    radius = np.hypot(fx, fy)
    theta = np.arctan2(fy, fx)
    radius[0, 0] = 1.0  # placeholder, DC gain is zeroed below
    log_r = np.log(radius)
    radial_den = 2.0 * np.log(cfg.sigma_f_ratio) ** 2
    angular_den = 2.0 * cfg.sigma_theta**2

    angular = [np.exp(-_angular_distance(theta, o) ** 2 / angular_den) for o in cfg.orientations]
    gains = np.empty((cfg.n_scales, cfg.n_orientations, height, width))
    for s, fs in enumerate(cfg.center_frequencies):
        radial = np.exp(-((log_r - np.log(fs)) ** 2) / radial_den)
        radial[0, 0] = 0.0
        for o, ang in enumerate(angular):
            gains[s, o] = radial * ang
    gains.setflags(write=False)
    return LogGaborBank(gains, width, height, cfg)


_bank_cache: dict[tuple[int, int, TextureConfig], LogGaborBank] = {}
_bank_lock = threading.Lock()


def build_bank(width: int, height: int, cfg: TextureConfig | None = None) -> LogGaborBank:
    """Return the (cached) Log-Gabor bank for an image size and configuration.

    Each gain is a Gaussian in log radial frequency around the band center
    times a Gaussian in orientation around the filter angle; the DC bin is
    zero for every filter.
    """
    cfg = cfg or TextureConfig()
    key = (int(width), int(height), cfg)
    bank = _bank_cache.get(key)
    if bank is not None:
        return bank
    with _bank_lock:
        bank = _bank_cache.get(key)
        if bank is None:
            bank = _build_bank(int(width), int(height), cfg)
            _bank_cache[key] = bank
    return bank


def clear_bank_cache() -> None:
    with _bank_lock:
        _bank_cache.clear()


def filter_amplitude(
    plane: np.ndarray,
    bank: LogGaborBank,
    channel: str = "Y",
    scales: Sequence[int] | None = None,
) -> AmplitudeSet:
    """Modulus of every band-pass response of ``plane`` (periodic boundary).

    ``scales`` selects 0-based scale indices; all scales by default.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape != (bank.height, bank.width):
        raise InvalidInputError(
            f"plane shape {plane.shape} does not match bank size {bank.height}x{bank.width}"
        )
    if channel not in CHANNELS:
        raise InvalidInputError(f"unknown channel tag {channel!r}")
    if scales is None:
        scales = range(bank.gains.shape[0])
    scales = tuple(int(s) for s in scales)
    spectrum = sp_fft.fft2(plane)
    n_orient = bank.gains.shape[1]
    amps = np.empty((len(scales), n_orient) + plane.shape)
    for k, s in enumerate(scales):
        for o in range(n_orient):
            amps[k, o] = np.abs(sp_fft.ifft2(spectrum * bank.gains[s, o], overwrite_x=True))
    return AmplitudeSet(amps, channel, scales)


def channel_texture_similarity(ref: AmplitudeSet, dis: AmplitudeSet, cfg: TextureConfig) -> np.ndarray:
    """Scale-weighted sum of per-band amplitude similarities for one channel.

    With ``cfg.normalize`` the sum is divided by (orientations x enabled
    scale weight), which keeps the map in (0, 1].
    """
    if ref.channel != dis.channel:
        raise InvalidInputError(f"channel mismatch: {ref.channel} vs {dis.channel}")
    if ref.scales != dis.scales or ref.amps.shape != dis.amps.shape:
        raise InvalidInputError("amplitude sets cover different scales or sizes")
    c2 = cfg.c2
    total = np.zeros(ref.shape)
    weight_sum = 0.0
    for k, s in enumerate(ref.scales):
        w = cfg.w_ga[s]
        weight_sum += w
        a, b = ref.amps[k], dis.amps[k]
        band = ((2.0 * a * b + c2) / (a * a + b * b + c2)).sum(axis=0)
        total += w * band
    if cfg.normalize:
        denom = ref.amps.shape[1] * weight_sum
        if denom <= 0:
            raise InvalidConfigError("enabled texture scales carry zero total weight")
        total /= denom
    return total


def combine_channels(t_y: np.ndarray, t_cb: np.ndarray, t_cr: np.ndarray, cfg: TextureConfig) -> np.ndarray:
    if not t_y.shape == t_cb.shape == t_cr.shape:
        raise InvalidInputError("channel similarity maps differ in shape")
    return np.sqrt(cfg.w_y * t_y**2 + cfg.w_cb * 0.25 * t_cb**2 + cfg.w_cr * 0.25 * t_cr**2)


def texture_stats(s_t: np.ndarray) -> PooledStats:
    return pooled_stats(s_t)


def texture_map(
    ref: YcbcrImage,
    dis: YcbcrImage,
    cfg: TextureConfig | None = None,
    scale_toggles: Sequence[bool] | None = None,
) -> np.ndarray:
    cfg = cfg or TextureConfig()
    if scale_toggles is None:
        scale_toggles = (True,) * cfg.n_scales
    if len(scale_toggles) != cfg.n_scales:
        raise InvalidConfigError("scale_toggles needs one flag per texture scale")
    scales = [s for s, on in enumerate(scale_toggles) if on]
    if not scales:
        raise InvalidConfigError("at least one texture scale must be enabled")
    if ref.y.shape != dis.y.shape:
        raise InvalidInputError(f"images differ in shape: {ref.y.shape} vs {dis.y.shape}")
    bank = build_bank(ref.width, ref.height, cfg)
    sims = []
    for tag, p_ref, p_dis in zip(CHANNELS, ref.planes, dis.planes):
        a_ref = filter_amplitude(p_ref, bank, tag, scales)
        a_dis = filter_amplitude(p_dis, bank, tag, scales)
        sims.append(channel_texture_similarity(a_ref, a_dis, cfg))
    return combine_channels(*sims, cfg)


def texture_features(
    ref: YcbcrImage,
    dis: YcbcrImage,
    cfg: TextureConfig | None = None,
    scale_toggles: Sequence[bool] | None = None,
) -> PooledStats:
    return texture_stats(texture_map(ref, dis, cfg, scale_toggles))


def write_bank(bank: LogGaborBank, fh: BinaryIO) -> None:
    """Serialize every gain plane as header + little-endian float64 rows."""
    n_scales, n_orient = bank.gains.shape[:2]
    for s in range(n_scales):
        for o in range(n_orient):
            fh.write(DUMP_HEADER.pack(DUMP_MAGIC, bank.width, bank.height, s + 1, o + 1))
            fh.write(np.ascontiguousarray(bank.gains[s, o], dtype="<f8").tobytes())


def read_bank_dump(fh: BinaryIO) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield ``(scale, orientation, gain)`` records from a dump stream."""
    while True:
        header = fh.read(DUMP_HEADER.size)
        if not header:
            return
        if len(header) != DUMP_HEADER.size:
            raise InvalidInputError("truncated filter dump header")
        magic, width, height, s, o = DUMP_HEADER.unpack(header)
        if magic != DUMP_MAGIC:
            raise InvalidInputError(f"bad filter dump magic {magic!r}")
        nbytes = width * height * 8
        payload = fh.read(nbytes)
        if len(payload) != nbytes:
            raise InvalidInputError("truncated filter dump payload")
        yield s, o, np.frombuffer(payload, dtype="<f8").reshape(height, width)
