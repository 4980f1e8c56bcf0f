import dataclasses
import io
import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import center_crop
from fgiqa.colorspace import rgb_to_ycbcr
from fgiqa.config import TextureConfig
from fgiqa.errors import InvalidConfigError, InvalidInputError
from fgiqa.texture import (
    AmplitudeSet,
    build_bank,
    channel_texture_similarity,
    combine_channels,
    filter_amplitude,
    frequency_grid,
    read_bank_dump,
    texture_features,
    texture_stats,
    write_bank,
)

SQRT_1125 = math.sqrt(1.125)


def _amps(value, channel="Y", shape=(1, 1), n_scales=5):
    return AmplitudeSet(np.full((n_scales, 4) + shape, float(value)), channel, tuple(range(n_scales)))


class TestConfig:
    def test_defaults(self):
        cfg = TextureConfig()
        np.testing.assert_allclose(cfg.center_frequencies, (0.098, 0.196, 0.294, 0.392, 0.49), atol=1e-12)
        assert cfg.w_ga == (0.5, 0.75, 1.0, 5.0, 6.0)
        assert (cfg.w_y, cfg.w_cb, cfg.w_cr) == (1.0, 0.25, 0.25)

    @pytest.mark.parametrize(
        "change",
        [
            {"f0": 0.16},
            {"scale_multipliers": (1.0, 0.5, 2.0, 2.5, 3.0)},
            {"sigma_f_ratio": 1.2},
            {"sigma_theta": 0.0},
            {"c2": 0.0},
            {"w_ga": (1.0, 1.0)},
            {"w_cb": -0.1},
        ],
    )
    def test_invalid(self, change):
        with pytest.raises(InvalidConfigError):
            TextureConfig(**change)


class TestBank:
    def test_frequency_grid_convention(self):
        fx, fy = frequency_grid(8, 5)
        np.testing.assert_allclose(fx[0], [0, 1 / 8, 2 / 8, 3 / 8, 4 / 8, -3 / 8, -2 / 8, -1 / 8])
        np.testing.assert_allclose(fy[:, 0], [0, 1 / 5, 2 / 5, -2 / 5, -1 / 5])

    def test_matches_pointwise_oracle(self):
        cfg = TextureConfig()
        bank = build_bank(12, 10, cfg)
        for s, fs in enumerate(cfg.center_frequencies):
            for o, th in enumerate(cfg.orientations):
                expected = oracles.gain_plane(10, 12, fs, th, cfg.sigma_f_ratio, cfg.sigma_theta)
                np.testing.assert_allclose(bank.gains[s, o], expected, rtol=1e-12, atol=1e-15)

    def test_range_and_dc(self):
        bank = build_bank(32, 24)
        assert bank.gains.shape == (5, 4, 24, 32)
        assert np.all(bank.gains >= 0) and np.all(bank.gains <= 1)
        assert np.all(bank.gains[:, :, 0, 0] == 0.0)

    def test_unit_gain_at_band_center(self):
        # f0 = 0.15 puts every band center on an integer bin of a width-10 grid.
        cfg = TextureConfig(f0=0.15)
        bank = build_bank(10, 8, cfg)
        for s, fs in enumerate(cfg.center_frequencies):
            u = round(fs * 10)
            assert bank.gain(s + 1, 1)[0, u] == pytest.approx(1.0, abs=1e-12)

    def test_peak_along_radial_axis(self):
        cfg = TextureConfig()
        w = h = 64
        bank = build_bank(w, h, cfg)
        for s, fs in enumerate(cfg.center_frequencies):
            along_x = bank.gains[s, 0, 0, : w // 2 + 1]  # theta = 0
            along_y = bank.gains[s, 2, : h // 2 + 1, 0]  # theta = pi/2
            nearest = int(round(fs * w))
            assert along_x.argmax() == nearest
            assert along_y.argmax() == nearest

    def test_half_power_points(self):
        ratio = 0.598
        spread = abs(math.log(ratio)) * math.sqrt(2 * math.log(2))
        assert math.exp(spread) == pytest.approx(1.832, abs=5e-4)
        assert math.exp(-spread) == pytest.approx(0.546, abs=5e-4)
        fs = 0.1
        for f in (fs * math.exp(spread), fs * math.exp(-spread)):
            assert oracles.gain(f, 0.0, fs, 0.0, ratio, math.pi / 8) == pytest.approx(0.5, abs=1e-12)

    def test_orientation_not_direction(self):
        # Opposite frequencies share an orientation, so the gain is even.
        bank = build_bank(9, 9)
        g = bank.gains[2, 1]
        mirrored = np.roll(g[::-1, ::-1], 1, axis=(0, 1))
        np.testing.assert_allclose(g, mirrored, atol=1e-15)

    def test_top_band_above_nyquist_rejected(self):
        with pytest.raises(InvalidConfigError):
            build_bank(16, 16, dataclasses.replace(TextureConfig(), f0=0.2))

    def test_too_small(self):
        with pytest.raises(InvalidInputError):
            build_bank(7, 16)

    def test_cache_returns_same_object_across_threads(self):
        cfg = TextureConfig(c2=123.0)
        results = []
        barrier = threading.Barrier(8)

        def worker():
            barrier.wait()
            results.append(build_bank(40, 30, cfg))

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len({id(b) for b in results}) == 1

    def test_gains_read_only(self):
        bank = build_bank(16, 16)
        with pytest.raises(ValueError):
            bank.gains[0, 0, 1, 1] = 5.0


class TestDump:
    def test_roundtrip_and_header(self):
        bank = build_bank(10, 8)
        buf = io.BytesIO()
        write_bank(bank, buf)
        raw = buf.getvalue()
        assert len(raw) == 20 * (16 + 10 * 8 * 8)
        assert raw[:4] == b"LGBK"
        assert int.from_bytes(raw[4:8], "little") == 10
        assert int.from_bytes(raw[8:12], "little") == 8
        assert int.from_bytes(raw[12:14], "little") == 1
        assert int.from_bytes(raw[14:16], "little") == 1
        buf.seek(0)
        records = list(read_bank_dump(buf))
        assert [(s, o) for s, o, _ in records] == [(s, o) for s in range(1, 6) for o in range(1, 5)]
        for s, o, g in records:
            np.testing.assert_array_equal(g, bank.gain(s, o))

    def test_bad_magic(self):
        with pytest.raises(InvalidInputError):
            list(read_bank_dump(io.BytesIO(b"XXXX" + bytes(12))))


class TestFilterAmplitude:
    def test_zero_plane(self):
        amps = filter_amplitude(np.zeros((16, 16)), build_bank(16, 16))
        assert amps.amps.shape == (5, 4, 16, 16)
        assert np.all(amps.amps == 0.0)

    def test_constant_plane(self):
        amps = filter_amplitude(np.full((16, 12), 9.0), build_bank(12, 16))
        assert np.all(amps.amps < 1e-12)

    def test_matches_naive_dft(self, rng):
        bank = build_bank(16, 16)
        plane = rng.uniform(0, 255, (16, 16))
        amps = filter_amplitude(plane, bank)
        for s in range(5):
            for o in range(4):
                expected = oracles.amplitude(plane, bank.gains[s, o])
                rel = np.abs(amps.amps[s, o] - expected) / np.abs(expected)
                assert rel.max() < 1e-9

    def test_naive_dft_oracles_agree(self, rng):
        x = rng.normal(size=(5, 4))
        np.testing.assert_allclose(oracles.naive_dft2(x), oracles.loop_dft2(x), atol=1e-12)

    def test_offset_invariance(self, rng):
        bank = build_bank(20, 18)
        plane = rng.uniform(0, 255, (18, 20))
        a = filter_amplitude(plane, bank).amps
        b = filter_amplitude(plane + 37.5, bank).amps
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)

    def test_scale_subset(self, rng):
        bank = build_bank(16, 16)
        plane = rng.uniform(0, 255, (16, 16))
        full = filter_amplitude(plane, bank)
        sub = filter_amplitude(plane, bank, scales=(1, 4))
        assert sub.scales == (1, 4)
        np.testing.assert_array_equal(sub.amps, full.amps[[1, 4]])

    def test_non_negative(self, rng):
        amps = filter_amplitude(rng.normal(size=(16, 16)), build_bank(16, 16)).amps
        assert np.all(amps >= 0)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            filter_amplitude(np.zeros((16, 17)), build_bank(16, 16))


class TestChannelSimilarity:
    def test_identical(self, rng):
        a = AmplitudeSet(rng.uniform(0, 50, (5, 4, 3, 3)), "Cb", tuple(range(5)))
        t = channel_texture_similarity(a, a, TextureConfig())
        assert np.all(t == 1.0)

    def test_zero_distorted(self):
        t = channel_texture_similarity(_amps(7.0), _amps(0.0), TextureConfig())
        assert t[0, 0] == pytest.approx(100 / (49 + 100), rel=1e-14)

    def test_hand_value(self):
        t = channel_texture_similarity(_amps(2.0), _amps(4.0), TextureConfig(c2=100.0))
        assert t[0, 0] == pytest.approx(116 / 120, rel=1e-14)

    def test_literal_sum_without_normalization(self):
        cfg = TextureConfig(normalize=False)
        t = channel_texture_similarity(_amps(3.0), _amps(3.0), cfg)
        assert t[0, 0] == pytest.approx(4 * sum(cfg.w_ga))

    def test_orientation_permutation(self, rng):
        a = rng.uniform(0, 50, (5, 4, 4, 4))
        b = rng.uniform(0, 50, (5, 4, 4, 4))
        perm = [2, 0, 3, 1]
        cfg = TextureConfig()
        t1 = channel_texture_similarity(AmplitudeSet(a, "Y", tuple(range(5))), AmplitudeSet(b, "Y", tuple(range(5))), cfg)
        t2 = channel_texture_similarity(
            AmplitudeSet(a[:, perm], "Y", tuple(range(5))), AmplitudeSet(b[:, perm], "Y", tuple(range(5))), cfg
        )
        np.testing.assert_allclose(t1, t2, rtol=1e-14)

    @settings(max_examples=50)
    @given(
        arrays(np.float64, (5, 4, 2, 2), elements=st.floats(0, 1e3)),
        arrays(np.float64, (5, 4, 2, 2), elements=st.floats(0, 1e3)),
    )
    def test_bounded(self, a, b):
        t = channel_texture_similarity(AmplitudeSet(a, "Y", tuple(range(5))), AmplitudeSet(b, "Y", tuple(range(5))), TextureConfig())
        assert np.all(t > 0) and np.all(t <= 1.0 + 1e-15)

    def test_channel_mismatch(self):
        with pytest.raises(InvalidInputError):
            channel_texture_similarity(_amps(1.0, "Y"), _amps(1.0, "Cr"), TextureConfig())


class TestCombine:
    def test_all_ones(self):
        s = combine_channels(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2)), TextureConfig())
        np.testing.assert_allclose(s, SQRT_1125, rtol=1e-15)
        assert SQRT_1125 == pytest.approx(1.06066, abs=1e-5)

    def test_luma_only(self, rng):
        cfg = TextureConfig(w_y=2.0, w_cb=0.0, w_cr=0.0)
        ty = rng.uniform(0.1, 1, (3, 3))
        s = combine_channels(ty, rng.uniform(size=(3, 3)), rng.uniform(size=(3, 3)), cfg)
        np.testing.assert_allclose(s, math.sqrt(2.0) * ty, rtol=1e-15)

    def test_zeros(self):
        z = np.zeros((2, 3))
        assert np.all(combine_channels(z, z, z, TextureConfig()) == 0)


class TestStats:
    def test_constant(self):
        s = texture_stats(np.full((4, 4), 0.8))
        assert (s.mean, s.std) == (0.8, 0.0)

    def test_two_pixels(self):
        s = texture_stats(np.array([[1.0, 0.0]]))
        assert (s.mean, s.std) == (0.5, 0.5)

    def test_ones(self):
        s = texture_stats(np.ones((3, 5)))
        assert (s.mean, s.std) == (1.0, 0.0)


class TestTextureFeatures:
    @settings(max_examples=10, deadline=None)
    @given(arrays(np.uint8, (9, 11, 3)))
    def test_self_similarity(self, img):
        ycc = rgb_to_ycbcr(img)
        s = texture_features(ycc, ycc)
        assert s.mean == SQRT_1125
        assert s.std == 0.0

    def test_single_scale_equals_reduced_bank(self, rng):
        ref = rgb_to_ycbcr(rng.integers(0, 256, (16, 20, 3)))
        dis = rgb_to_ycbcr(rng.integers(0, 256, (16, 20, 3)))
        toggled = texture_features(ref, dis, TextureConfig(), (False, False, False, False, True))
        reduced = TextureConfig(scale_multipliers=(10 / 3,), w_ga=(6.0,))
        direct = texture_features(ref, dis, reduced, (True,))
        assert toggled.mean == pytest.approx(direct.mean, rel=1e-13)
        assert toggled.std == pytest.approx(direct.std, rel=1e-10)

    def test_all_scales_disabled(self, rng):
        ycc = rgb_to_ycbcr(rng.integers(0, 256, (8, 8, 3)))
        with pytest.raises(InvalidConfigError):
            texture_features(ycc, ycc, TextureConfig(), (False,) * 5)

    @pytest.mark.slow
    def test_jpeg_patch_against_oracle(self, photos, jpeg):
        patch = center_crop(photos["rocket"], 32)
        ref, dis = rgb_to_ycbcr(patch), rgb_to_ycbcr(jpeg(patch, 10))
        got = texture_features(ref, dis)
        mean, std = oracles.texture_features(np.stack(ref.planes), np.stack(dis.planes))
        assert got.mean == pytest.approx(mean, rel=1e-9)
        assert got.std == pytest.approx(std, rel=1e-6)
        assert got.mean < 1.0
        assert got.std > 0

    @pytest.mark.parametrize("name", ["astronaut", "coffee", "chelsea", "rocket"])
    def test_jpeg10_below_self_similarity(self, photos, jpeg, name):
        # Chroma terms can push E_t above 1 on mild content; the hard bound is
        # the self-similarity value.
        patch = center_crop(photos[name], 32)
        got = texture_features(rgb_to_ycbcr(patch), rgb_to_ycbcr(jpeg(patch, 10)))
        assert got.mean < SQRT_1125 and got.std > 0

    def test_size_mismatch(self, rng):
        a = rgb_to_ycbcr(rng.integers(0, 256, (8, 8, 3)))
        b = rgb_to_ycbcr(rng.integers(0, 256, (8, 9, 3)))
        with pytest.raises(InvalidInputError):
            texture_features(a, b)
