"""Codeword construction, orthogonality structure, rate, and coding gain."""

import itertools
import math

import numpy as np
import pytest

from stbcsim.codebook import (CODE_SCALE, GRAM_PATTERN_3TX, GRAM_PATTERN_4TX,
                              _encode4_miswired, alamouti_block, assemble,
                              cgd_min, encode3, encode4, gram_check,
                              gram_matrix, optimize_rotation, rate)
from stbcsim.constellation import get_constellation, rotate_symbols

QAM4 = get_constellation("qam4")
BPSK = get_constellation("bpsk")


def random_symbols(rng, spec=QAM4, theta=np.pi / 4, n=None):
    shape = (8,) if n is None else (n, 8)
    idx = rng.integers(0, spec.size, size=shape)
    return rotate_symbols(spec.points[idx], theta)


class TestAlamoutiBlock:
    def test_real_pair(self):
        np.testing.assert_array_equal(alamouti_block(1, 1), [[1, 1], [-1, 1]])

    def test_zero(self):
        np.testing.assert_array_equal(alamouti_block(0, 0), np.zeros((2, 2)))

    def test_complex_pair_and_orthogonality(self):
        g = alamouti_block(1, 1j)
        np.testing.assert_array_equal(g, [[1, 1j], [1j, 1]])
        np.testing.assert_allclose(g.conj().T @ g, 2 * np.eye(2))

    def test_column_orthogonality_random(self):
        rng = np.random.default_rng(0)
        x1, x2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        g = alamouti_block(x1, x2)
        np.testing.assert_allclose(
            g.conj().T @ g, (abs(x1) ** 2 + abs(x2) ** 2) * np.eye(2), atol=1e-12
        )


class TestEncode4:
    def test_marker_entries(self):
        rng = np.random.default_rng(1)
        s = random_symbols(rng)
        c1, c2 = encode4(s)
        np.testing.assert_allclose(c1[0, 0], s[0] + 1j * s[4])
        np.testing.assert_allclose(c2[1, 1], np.conj(s[0]) + 1j * np.conj(s[4]))
        np.testing.assert_allclose(c1[3, 0], s[3] + 1j * s[7])
        np.testing.assert_allclose(c2[3, 0], s[3] - 1j * s[7])

    def test_zero_message(self):
        c1, c2 = encode4(np.zeros(8))
        assert not c1.any() and not c2.any()

    def test_combined_symbol_construction(self):
        """Both blocks equal the classical layout over X and X'."""
        rng = np.random.default_rng(2)
        s = random_symbols(rng)
        x = s[:4] + 1j * s[4:]
        xp = s[:4] - 1j * s[4:]

        def layout(v):
            a = alamouti_block(v[0], v[1])
            b = alamouti_block(v[2], v[3])
            return np.block([[a, b], [-b.conj(), a.conj()]])

        c1, c2 = encode4(s)
        np.testing.assert_array_equal(c1, layout(x))
        np.testing.assert_array_equal(c2, layout(xp))

    def test_conjugate_pair_symmetry(self):
        """C2(s) equals C1 of the message with S5..S8 negated, exactly."""
        rng = np.random.default_rng(3)
        s = random_symbols(rng)
        mirrored = s.copy()
        mirrored[4:] = -mirrored[4:]
        c1m, _ = encode4(mirrored)
        _, c2 = encode4(s)
        np.testing.assert_array_equal(c2, c1m)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(4)
        s = random_symbols(rng, n=5)
        c1b, c2b = encode4(s)
        for i in range(5):
            c1, c2 = encode4(s[i])
            np.testing.assert_array_equal(c1b[i], c1)
            np.testing.assert_array_equal(c2b[i], c2)

    def test_shape_error(self):
        with pytest.raises(ValueError, match="8 symbols"):
            encode4(np.ones(7))


class TestEncode3:
    def test_is_first_three_columns(self):
        rng = np.random.default_rng(5)
        s = random_symbols(rng)
        c1f, c2f = encode4(s)
        c1, c2 = encode3(s)
        assert c1.shape == (4, 3) and c2.shape == (4, 3)
        np.testing.assert_array_equal(c1, c1f[:, :3])
        np.testing.assert_array_equal(c2, c2f[:, :3])


class TestAssemble:
    def test_block_diagonal(self):
        rng = np.random.default_rng(6)
        c1, c2 = encode4(random_symbols(rng))
        cw = assemble(c1, c2)
        assert cw.m.shape == (8, 8)
        np.testing.assert_array_equal(cw.m[:4, 4:], np.zeros((4, 4)))
        np.testing.assert_array_equal(cw.m[4:, :4], np.zeros((4, 4)))
        np.testing.assert_allclose(cw.m[:4, :4], CODE_SCALE * c1)

    def test_zero_blocks(self):
        cw = assemble(np.zeros((4, 4)), np.zeros((4, 4)))
        assert not cw.m.any()

    def test_frobenius_norm(self):
        rng = np.random.default_rng(7)
        c1, c2 = encode4(random_symbols(rng))
        cw = assemble(c1, c2, scale=0.3)
        expect = 0.3 * math.sqrt(np.sum(np.abs(c1) ** 2) + np.sum(np.abs(c2) ** 2))
        np.testing.assert_allclose(np.linalg.norm(cw.m), expect)

    def test_width_mismatch(self):
        with pytest.raises(ValueError, match="shapes differ"):
            assemble(np.zeros((4, 4)), np.zeros((4, 3)))

    def test_scale_gives_unit_entry_energy(self):
        """Mean transmitted-entry energy is 1 under the default scale."""
        rng = np.random.default_rng(8)
        s = random_symbols(rng, n=100_000)
        c1, c2 = encode4(s)
        entry_energy = 0.5 * (np.mean(np.abs(c1) ** 2) + np.mean(np.abs(c2) ** 2))
        assert abs(CODE_SCALE**2 * entry_energy - 1.0) < 0.01


class TestGramStructure:
    @pytest.mark.parametrize("encode,pattern", [(encode4, GRAM_PATTERN_4TX),
                                                (encode3, GRAM_PATTERN_3TX)])
    def test_pattern_on_random_draws(self, encode, pattern):
        rng = np.random.default_rng(9)
        s = random_symbols(rng, n=1000)
        c1, c2 = encode(s)
        for i in range(1000):
            res = gram_check(assemble(c1[i], c2[i]).m, pattern, tol=1e-12)
            assert res.passed, res.violations

    def test_allowed_pairs_actually_couple(self):
        """Each allowed pair is genuinely needed: it couples on some draw."""
        rng = np.random.default_rng(10)
        seen = {pair: 0.0 for pair in GRAM_PATTERN_4TX.allowed}
        for _ in range(20):
            c1, c2 = encode4(random_symbols(rng))
            g = gram_matrix(assemble(c1, c2).m)
            for pair in seen:
                seen[pair] = max(seen[pair], abs(g[pair]))
        for pair, mag in seen.items():
            assert mag > 1e-3, (pair, mag)

    def test_miswired_variant_fails_at_pair_5_6(self):
        rng = np.random.default_rng(11)
        s = random_symbols(rng)
        c1, c2 = _encode4_miswired(s)
        res = gram_check(assemble(c1, c2).m, GRAM_PATTERN_4TX, tol=1e-12)
        assert not res.passed
        pairs = {(i, j) for (i, j, _) in res.violations}
        assert (5, 6) in pairs
        # the coupling left behind is 2*S4r*(S3r - j*S7r)*, up to the scale
        g = gram_matrix(assemble(c1, c2).m)
        expect = CODE_SCALE**2 * 2 * s[3] * np.conj(s[2] - 1j * s[6])
        np.testing.assert_allclose(g[4, 5], expect, atol=1e-12)

    def test_zero_codeword_passes(self):
        res = gram_check(np.zeros((8, 8)), GRAM_PATTERN_4TX)
        assert res.passed

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError, match="columns"):
            gram_check(np.zeros((8, 6)), GRAM_PATTERN_4TX)


class TestRate:
    @pytest.mark.parametrize("label", ["proposed4", "proposed3"])
    def test_full_rate(self, label):
        r = rate(label)
        assert r.value == 1.0
        assert r.symbols_per_period == 8
        assert r.slots_per_period == 8

    def test_unknown_encoder(self):
        with pytest.raises(KeyError, match="unknown encoder"):
            rate("proposed5")


def _cgd_oracle(spec, theta, encoder="proposed4"):
    """Independent slow path: plain loop over all message pairs, full-size
    determinant of the assembled difference."""
    encode = encode4 if encoder == "proposed4" else encode3
    messages = list(itertools.product(range(spec.size), repeat=8))
    cws = []
    for midx in messages:
        s = rotate_symbols(spec.points[list(midx)], theta)
        cws.append(assemble(*encode(s)).m)
    best = np.inf
    for i in range(len(cws)):
        for j in range(i + 1, len(cws)):
            d = cws[i] - cws[j]
            val = np.linalg.det(d.conj().T @ d).real
            fro2 = np.sum(np.abs(d) ** 2)
            n = d.shape[1]
            if val < 1e-9 * (fro2 / n) ** n:
                val = 0.0
            best = min(best, val)
    return best


class TestCgd:
    def test_bpsk_no_rotation_loses_diversity(self):
        res = cgd_min(BPSK, 0.0, "proposed4")
        assert res.value == 0.0
        assert res.min_rank < 8
        assert res.exhaustive
        assert res.pairs_evaluated == 256 * 255 // 2

    def test_bpsk_quarter_pi_reference_value(self):
        res = cgd_min(BPSK, math.pi / 4, "proposed4")
        np.testing.assert_allclose(res.value, 256.0, rtol=1e-10)
        assert res.min_rank == 8

    def test_bpsk_quarter_pi_3tx_reference_value(self):
        res = cgd_min(BPSK, math.pi / 4, "proposed3")
        np.testing.assert_allclose(res.value, 64.0, rtol=1e-10)
        assert res.min_rank == 6

    @pytest.mark.parametrize("theta", [0.0, math.pi / 4, 0.2])
    def test_matches_plain_loop_oracle(self, theta):
        res = cgd_min(BPSK, theta, "proposed4")
        np.testing.assert_allclose(res.value, _cgd_oracle(BPSK, theta), rtol=1e-9)

    def test_block_determinant_factorisation(self):
        """det of the assembled difference equals the product of block dets."""
        rng = np.random.default_rng(12)
        for _ in range(50):
            sa = random_symbols(rng, BPSK, 0.31)
            sb = random_symbols(rng, BPSK, 0.31)
            d1, d2 = (a - b for a, b in zip(encode4(sa), encode4(sb)))
            full = assemble(d1, d2).m
            direct = np.linalg.det(full.conj().T @ full).real
            blocks = (CODE_SCALE**16
                      * abs(np.linalg.det(d1)) ** 2
                      * abs(np.linalg.det(d2)) ** 2)
            np.testing.assert_allclose(direct, blocks, rtol=1e-8, atol=1e-9)

    def test_exhaustive_refused_for_qam(self):
        with pytest.raises(ValueError, match="infeasible"):
            cgd_min(QAM4, math.pi / 4, method="exhaustive")

    def test_sampled_mode_is_labelled_upper_bound(self):
        res = cgd_min(QAM4, math.pi / 4, n_samples=20_000, seed=5)
        assert not res.exhaustive
        assert res.value > 0
        exact_single_diff = cgd_min(BPSK, math.pi / 4).value
        assert res.value <= exact_single_diff * 10  # loose sanity bound


class TestRotationSearch:
    def test_optimum_within_one_grid_step_of_quarter_pi(self):
        step = math.pi / 90
        res = optimize_rotation(BPSK, "proposed4", grid_step=step)
        assert abs(res.theta_star - math.pi / 4) <= step + 1e-12

    def test_curve_start_matches_point_evaluation(self):
        res = optimize_rotation(BPSK, "proposed4", grid_step=math.pi / 36)
        np.testing.assert_allclose(res.values[0], cgd_min(BPSK, 0.0).value)

    def test_curve_symmetry(self):
        """min CGD is invariant under theta -> pi/2 - theta on this grid."""
        res = optimize_rotation(BPSK, "proposed4", grid_step=math.pi / 36)
        n = len(res.thetas)
        for k in range(1, n):
            np.testing.assert_allclose(res.values[k], res.values[n - k],
                                       rtol=1e-9, atol=1e-12)

    def test_grid_size_and_bounds(self):
        step = math.pi / 36
        res = optimize_rotation(BPSK, "proposed4", grid_step=step)
        assert len(res.thetas) == math.ceil((math.pi / 2) / step)
        assert res.thetas[-1] < math.pi / 2

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError, match="positive"):
            optimize_rotation(BPSK, grid_step=0.0)
