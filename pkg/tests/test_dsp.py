import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from uplink_noma.dsp import (CpBlock, add_cp, circular_convolve, dft, idft, linear_convolve,
                             remove_cp, sliding_correlate)


def dft_matrix_oracle(x):
    N = len(x)
    n = np.arange(N)
    W = np.exp(-2j * np.pi * np.outer(n, n) / N) / np.sqrt(N)
    return W @ x


def linear_conv_oracle(x, h):
    out = np.zeros(len(x) + len(h) - 1, dtype=complex)
    for i, xi in enumerate(x):
        for j, hj in enumerate(h):
            out[i + j] += xi * hj
    return out


def correlate_oracle(y, z):
    return np.array([sum(y[d + n] * np.conj(z[n]) for n in range(len(z)))
                     for d in range(len(y) - len(z) + 1)])


class TestTransforms:
    def test_round_trip(self, rng):
        x = crandn(rng, 16)
        assert np.max(np.abs(dft(idft(x)) - x)) < 1e-12
        y = crandn(rng, 63)
        assert np.max(np.abs(idft(dft(y)) - y)) < 1e-12

    def test_delta_and_constant(self):
        np.testing.assert_allclose(dft([1, 0, 0, 0]), [0.5] * 4, atol=1e-15)
        np.testing.assert_allclose(idft([1, 1, 1, 1]), [2, 0, 0, 0], atol=1e-15)

    def test_parseval(self, rng):
        x = crandn(rng, 63)
        assert abs(np.linalg.norm(dft(x)) ** 2 / np.linalg.norm(x) ** 2 - 1) < 1e-12

    @pytest.mark.parametrize("N", [5, 63, 64, 100])
    def test_matches_direct_sum(self, rng, N):
        x = crandn(rng, N)
        assert np.max(np.abs(dft(x) - dft_matrix_oracle(x))) < 1e-12

    def test_unitary_at_4096(self, rng):
        x = crandn(rng, 4096)
        assert np.max(np.abs(idft(dft(x)) - x)) < 1e-12
        assert abs(np.linalg.norm(dft(x)) - np.linalg.norm(x)) < 1e-12 * np.linalg.norm(x)

    def test_phase_ramp_sign_convention(self):
        # idft of exp(+j 2 pi D k / N) peaks at -D mod N; dft of the same ramp at +D
        N, D = 16, 4
        ramp = np.exp(2j * np.pi * D * np.arange(N) / N)
        expected = np.zeros(N)
        expected[(-D) % N] = np.sqrt(N)
        np.testing.assert_allclose(idft(ramp), expected, atol=1e-12)
        expected = np.zeros(N)
        expected[D] = np.sqrt(N)
        np.testing.assert_allclose(dft(ramp), expected, atol=1e-12)

    @pytest.mark.parametrize("bad", [[], np.zeros((2, 2)), [1.0, np.nan]])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(ValueError):
            dft(bad)
        with pytest.raises(ValueError):
            idft(bad)


class TestCyclicPrefix:
    def test_add_cp_example(self):
        blk = add_cp([1, 2, 3, 4], 2)
        np.testing.assert_array_equal(blk.samples, [3, 4, 1, 2, 3, 4])
        assert len(blk) == 6 and blk.has_cp_property()

    def test_zero_length_prefix(self, rng):
        x = crandn(rng, 8)
        np.testing.assert_array_equal(add_cp(x, 0).samples, x)

    def test_round_trip(self, rng):
        x = crandn(rng, 32)
        np.testing.assert_array_equal(remove_cp(add_cp(x, 7)), x)

    def test_cp_too_long(self):
        with pytest.raises(ValueError):
            add_cp(np.ones(4), 4)
        with pytest.raises(ValueError):
            add_cp(np.ones(4), -1)

    def test_remove_cp_ignores_corrupted_prefix(self, rng):
        blk = add_cp(crandn(rng, 8), 3)
        bad = blk.samples.copy()
        bad[:3] = 99
        rx = CpBlock(bad, 8, 3)
        assert not rx.has_cp_property()
        np.testing.assert_array_equal(remove_cp(rx), blk.samples[3:])
        assert remove_cp(rx).size == rx.body_len

    def test_malformed_block(self):
        with pytest.raises(ValueError):
            CpBlock(np.ones(5), 4, 2)

    @pytest.mark.parametrize("N,L,L_p", [(16, 4, 4), (64, 8, 3), (63, 10, 1)])
    def test_cp_theorem(self, rng, N, L, L_p):
        x, h = crandn(rng, N), crandn(rng, L_p)
        rx = linear_conv_oracle(add_cp(x, L).samples, h)[:N + L]
        got = remove_cp(CpBlock(rx, N, L))
        assert np.max(np.abs(got - circular_convolve(x, h))) < 1e-10


class TestConvolution:
    def test_delta_identity(self, rng):
        x = crandn(rng, 10)
        np.testing.assert_allclose(circular_convolve(x, [1]), x, atol=1e-14)

    def test_hand_example(self):
        np.testing.assert_allclose(circular_convolve([1, 2, 3, 4], [1, 1]), [5, 3, 5, 7], atol=1e-12)

    def test_convolution_theorem(self, rng):
        N = 32
        x, h = crandn(rng, N), crandn(rng, 5)
        hz = np.concatenate([h, np.zeros(N - 5)])
        assert np.max(np.abs(idft(dft(x) * dft(hz)) * np.sqrt(N) - circular_convolve(x, h))) < 1e-10

    def test_h_longer_than_x(self):
        with pytest.raises(ValueError):
            circular_convolve([1, 2], [1, 2, 3])

    def test_linear_matches_oracle(self, rng):
        x, h = crandn(rng, 40), crandn(rng, 6)
        assert np.max(np.abs(linear_convolve(x, h) - linear_conv_oracle(x, h))) < 1e-12


class TestSlidingCorrelate:
    def test_self(self, rng):
        z = crandn(rng, 20)
        out = sliding_correlate(z, z)
        assert out.shape == (1,)
        assert abs(out[0] - np.vdot(z, z)) < 1e-12

    def test_pure_delay(self, rng):
        z = crandn(rng, 16)
        y = np.concatenate([np.zeros(5), z, np.zeros(4)])
        assert np.argmax(np.abs(sliding_correlate(y, z))) == 5

    def test_reference_too_long(self):
        with pytest.raises(ValueError):
            sliding_correlate(np.ones(3), np.ones(4))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2**32 - 1))
    def test_double_loop_oracle(self, ny, nz, seed):
        nz = min(nz, ny)
        r = np.random.default_rng(seed)
        y, z = crandn(r, ny), crandn(r, nz)
        assert np.max(np.abs(sliding_correlate(y, z) - correlate_oracle(y, z))) < 1e-12
