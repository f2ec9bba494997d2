"""Fading statistics, observation model, SNR calibration, substreams."""

import numpy as np
import pytest

from stbcsim.channel import (Observation, complex_gaussian, draw_channel,
                             draw_quasi_static, snr_to_n0, substream,
                             transmit)
from stbcsim.codebook import assemble, encode4
from stbcsim.constellation import get_constellation


class TestDraws:
    def test_block_channel_shape(self):
        rng = np.random.default_rng(0)
        assert draw_channel(rng, 4).shape == (8,)
        assert draw_channel(rng, 3).shape == (6,)
        assert draw_quasi_static(rng, 2).shape == (2,)

    def test_unsupported_antenna_count(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            draw_channel(rng, 5)

    def test_unit_variance(self):
        rng = np.random.default_rng(1)
        h = np.array([draw_channel(rng, 4) for _ in range(12_500)])
        var = np.mean(np.abs(h) ** 2)
        assert abs(var - 1.0) < 0.02

    def test_blocks_uncorrelated(self):
        rng = np.random.default_rng(2)
        h = np.array([draw_channel(rng, 4) for _ in range(100_000)])
        corr = np.mean(h[:, 0] * np.conj(h[:, 4]))
        assert abs(corr) < 0.02

    def test_fixed_seed_replays(self):
        h1 = draw_channel(np.random.default_rng(42), 4)
        h2 = draw_channel(np.random.default_rng(42), 4)
        np.testing.assert_array_equal(h1, h2)


class TestTransmit:
    def _codeword(self, seed=0):
        rng = np.random.default_rng(seed)
        spec = get_constellation("qam4")
        idx = rng.integers(0, 4, size=8)
        return assemble(*encode4(spec.points[idx]))

    def test_noiseless_is_exact_product(self):
        cw = self._codeword()
        h = draw_channel(np.random.default_rng(3), 4)
        obs = transmit(cw, h, 0.0)
        assert isinstance(obs, Observation)
        np.testing.assert_array_equal(obs.y, cw.m @ h)

    def test_zero_codeword(self):
        cw = assemble(np.zeros((4, 4)), np.zeros((4, 4)))
        obs = transmit(cw, np.ones(8, complex), 0.0)
        assert not obs.y.any()

    def test_block_structure(self):
        """First-block outputs depend only on first-block fading."""
        cw = self._codeword()
        h = draw_channel(np.random.default_rng(4), 4)
        ha = h.copy()
        ha[4:] = 0
        hb = h.copy()
        hb[:4] = 0
        ya = transmit(cw, ha, 0.0).y
        yb = transmit(cw, hb, 0.0).y
        np.testing.assert_array_equal(ya[4:], np.zeros(4))
        np.testing.assert_array_equal(yb[:4], np.zeros(4))
        np.testing.assert_allclose(ya + yb, transmit(cw, h, 0.0).y)

    def test_noiseless_linearity(self):
        cwa = self._codeword(5)
        cwb = self._codeword(6)
        h = draw_channel(np.random.default_rng(7), 4)
        combo = 0.7 * cwa.m + 1.3 * cwb.m
        np.testing.assert_allclose(
            transmit(combo, h, 0.0).y,
            0.7 * transmit(cwa.m, h, 0.0).y + 1.3 * transmit(cwb.m, h, 0.0).y,
        )

    def test_dimension_mismatch(self):
        cw = self._codeword()
        with pytest.raises(ValueError, match="does not match"):
            transmit(cw, np.ones(6, complex), 0.0)

    def test_noise_variance_calibration(self):
        rng = np.random.default_rng(8)
        n = complex_gaussian(rng, 100_000, variance=0.37)
        assert abs(np.mean(np.abs(n) ** 2) - 0.37) < 0.37 * 0.02

    def test_noise_requires_rng(self):
        cw = self._codeword()
        with pytest.raises(ValueError, match="rng"):
            transmit(cw, np.ones(8, complex), 1.0)


class TestSnrCalibration:
    def test_es_mode_example(self):
        spec = get_constellation("qam4")
        assert snr_to_n0(0.0, spec, mt=4) == 4.0

    def test_eb_equals_es_for_bpsk(self):
        spec = get_constellation("bpsk")
        assert snr_to_n0(7.0, spec, 4, "eb") == snr_to_n0(7.0, spec, 4, "es")

    def test_eb_divides_by_bits(self):
        spec = get_constellation("qam4")
        assert snr_to_n0(5.0, spec, 4, "eb") == snr_to_n0(5.0, spec, 4, "es") / 2

    def test_monotone_decreasing(self):
        spec = get_constellation("qam4")
        vals = [snr_to_n0(s, spec, 4) for s in range(0, 20, 2)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown snr mode"):
            snr_to_n0(0.0, get_constellation("bpsk"), 4, "ebno")


class TestSubstreams:
    def test_same_cell_replays(self):
        a = substream(123, 4, 7).standard_normal(16)
        b = substream(123, 4, 7).standard_normal(16)
        np.testing.assert_array_equal(a, b)

    def test_distinct_cells_differ(self):
        base = substream(123, 0, 0).standard_normal(16)
        for point, batch in [(0, 1), (1, 0), (1, 1)]:
            other = substream(123, point, batch).standard_normal(16)
            assert not np.array_equal(base, other)

    def test_seed_matters(self):
        a = substream(1, 0, 0).standard_normal(8)
        b = substream(2, 0, 0).standard_normal(8)
        assert not np.array_equal(a, b)
