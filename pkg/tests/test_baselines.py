"""Reference codes: construction, exact ML decoding, rotation benefit."""

import math

import numpy as np
import pytest

from stbcsim.baselines import (BASELINES, decode_baseline,
                               decode_baseline_exhaustive, encode_baseline,
                               get_baseline, rotate_block_symbols)
from stbcsim.channel import complex_gaussian, snr_to_n0
from stbcsim.codebook import gram_matrix
from stbcsim.constellation import get_constellation
from stbcsim.sim import BASELINE_GRAM_PATTERNS, SweepConfig, run_ber_sweep
from stbcsim.codebook import gram_check

BPSK = get_constellation("bpsk")
QAM4 = get_constellation("qam4")


def run_trial(rng, code, spec, snr_db):
    idx = rng.integers(0, spec.size, size=code.symbols_per_block)
    cw = encode_baseline(code, spec.points[idx])
    h = complex_gaussian(rng, code.antennas)
    y = cw @ h
    if snr_db is not None:
        y = y + complex_gaussian(rng, code.slots, snr_to_n0(snr_db, spec, code.antennas))
    return idx, y, h


class TestEncoding:
    def test_alamouti_example(self):
        code = get_baseline("alamouti2")
        np.testing.assert_array_equal(
            encode_baseline(code, [1, 1]), [[1, 1], [-1, 1]])

    def test_all_rates_are_one(self):
        for code in BASELINES.values():
            assert code.rate == 1.0

    def test_jafarkhani_gram_coupling(self):
        rng = np.random.default_rng(0)
        code = get_baseline("jafarkhani4")
        s = QAM4.points[rng.integers(0, 4, size=4)]
        g = gram_matrix(encode_baseline(code, s))
        res = gram_check(encode_baseline(code, s), BASELINE_GRAM_PATTERNS["jafarkhani4"])
        assert res.passed
        assert abs(g[0, 3]) > 1e-6 and abs(g[1, 2]) > 1e-6

    def test_rotated_with_zero_theta_reduces_to_plain(self):
        rng = np.random.default_rng(1)
        s = QAM4.points[rng.integers(0, 4, size=4)]
        rot = get_baseline("qostbc_rot4")
        plain = get_baseline("jafarkhani4")
        np.testing.assert_array_equal(
            encode_baseline(rot, s, theta=0.0), encode_baseline(plain, s))

    def test_three_antenna_variant_drops_last_column(self):
        rng = np.random.default_rng(2)
        s = QAM4.points[rng.integers(0, 4, size=4)]
        full = encode_baseline(get_baseline("qostbc_rot4"), s)
        trimmed = encode_baseline(get_baseline("qostbc_rot3"), s)
        assert trimmed.shape == (4, 3)
        np.testing.assert_array_equal(trimmed, full[:, :3])

    def test_rotation_rule(self):
        s = np.ones(4, dtype=complex)
        out = rotate_block_symbols(s, math.pi / 4)
        np.testing.assert_allclose(out[:2], [1, 1])
        np.testing.assert_allclose(out[2:], np.exp(1j * math.pi / 4) * np.ones(2))

    def test_symbol_count_validated(self):
        with pytest.raises(ValueError, match="symbols per block"):
            encode_baseline(get_baseline("alamouti2"), [1, 1, 1])

    @pytest.mark.parametrize("label", sorted(BASELINES))
    def test_gram_patterns(self, label):
        rng = np.random.default_rng(3)
        code = get_baseline(label)
        for _ in range(100):
            s = QAM4.points[rng.integers(0, 4, size=code.symbols_per_block)]
            res = gram_check(encode_baseline(code, s),
                             BASELINE_GRAM_PATTERNS[label], tol=1e-12)
            assert res.passed, res.violations


class TestDecoding:
    def test_alamouti_noiseless_recovery(self):
        code = get_baseline("alamouti2")
        for seed in range(20):
            rng = np.random.default_rng(seed)
            idx, y, h = run_trial(rng, code, QAM4, None)
            dec = decode_baseline(code, y, h, QAM4)
            np.testing.assert_array_equal(dec.indices, idx)
            assert dec.metric < 1e-20

    def test_alamouti_combining_equals_exhaustive(self):
        code = get_baseline("alamouti2")
        for seed in range(100):
            rng = np.random.default_rng(seed)
            _, y, h = run_trial(rng, code, QAM4, 5.0)
            da = decode_baseline(code, y, h, QAM4)
            db = decode_baseline_exhaustive(code, y, h, QAM4)
            np.testing.assert_array_equal(da.indices, db.indices)

    @pytest.mark.parametrize("label", ["jafarkhani4", "qostbc_rot4", "qostbc_rot3"])
    def test_pairwise_equals_exhaustive_bpsk(self, label):
        code = get_baseline(label)
        for seed in range(200):
            rng = np.random.default_rng(seed)
            _, y, h = run_trial(rng, code, BPSK, 5.0)
            da = decode_baseline(code, y, h, BPSK)
            db = decode_baseline_exhaustive(code, y, h, BPSK)
            np.testing.assert_array_equal(da.indices, db.indices)

    def test_pairwise_equals_exhaustive_qam4(self):
        code = get_baseline("qostbc_rot4")
        for seed in range(50):
            rng = np.random.default_rng(seed)
            _, y, h = run_trial(rng, code, QAM4, 8.0)
            da = decode_baseline(code, y, h, QAM4)
            db = decode_baseline_exhaustive(code, y, h, QAM4)
            np.testing.assert_array_equal(da.indices, db.indices)

    def test_candidate_counts(self):
        rng = np.random.default_rng(4)
        code = get_baseline("qostbc_rot4")
        _, y, h = run_trial(rng, code, QAM4, 5.0)
        dec = decode_baseline(code, y, h, QAM4)
        assert dec.candidates_evaluated == 2 * 4**2

    def test_shape_validation(self):
        code = get_baseline("jafarkhani4")
        with pytest.raises(ValueError, match="expected y"):
            decode_baseline(code, np.zeros(3, complex), np.zeros(4, complex), QAM4)


def test_rotation_improves_high_snr_ber():
    """Rotated variant beats the unrotated one at 15 dB, 4QAM."""
    bers = {}
    for label in ("jafarkhani4", "qostbc_rot4"):
        cfg = SweepConfig(code=label, mod="qam4", snr_start=15, snr_stop=15,
                          snr_step=1, min_bit_errors=400, max_trials=300_000,
                          seed=11).validate()
        bers[label] = run_ber_sweep(cfg)[0].ber
    assert bers["qostbc_rot4"] < bers["jafarkhani4"]
