import numpy as np
import pytest

from conftest import crandn
from uplink_noma.channel import ChannelRealization, NoiseSpec, apply_cfo, awgn, compose_uplink, draw_channel
from uplink_noma.dsp import idft
from uplink_noma.estimation import (ChannelEstimate, ReferenceNotFound, TimingEstimate, compensate_cfo,
                                    estimate_cfo, estimate_channels, estimate_timing, first_path,
                                    matched_filter, nmse)
from uplink_noma.waveform import ZcParams, build_preamble_set, generate_pss


def preamble_rx(ps, taps, offsets=None, extra=0, rng=None):
    M = ps.M
    offsets = np.zeros(M, dtype=int) if offsets is None else offsets
    frames = [np.concatenate([ps.z_cp[m].samples, np.zeros(extra)]) for m in range(M)]
    ch = ChannelRealization(taps, np.zeros(M), offsets)
    return compose_uplink(frames, ch, NoiseSpec(np.inf), rng)


class TestTiming:
    ps = build_preamble_set(ZcParams(256, 25), 2, 1, 16, 128)

    @pytest.mark.parametrize("delta", [0, 5, 64])
    def test_single_user_flat(self, delta):
        ps1 = build_preamble_set(ZcParams(256, 25), 1, 1, 16)
        y = preamble_rx(ps1, np.ones((1, 1)), [delta], extra=80)
        est = estimate_timing(y, ps1, 0, 64)
        assert est.delta == delta
        assert est.peak == pytest.approx(256, rel=1e-9)
        assert est.metric.size == 65 and est.peak >= est.metric.max()

    def test_two_users_superimposed(self, rng):
        for _ in range(20):
            d = rng.integers(0, 65, size=2)
            taps = np.exp(2j * np.pi * rng.random((2, 1)))
            y = preamble_rx(self.ps, taps, d, extra=80)
            assert [estimate_timing(y, self.ps, m, 64).delta for m in range(2)] == list(d)

    def test_multipath_peak_on_strongest_tap(self):
        ps = build_preamble_set(ZcParams(256, 25), 1, 4, 16)
        taps = np.array([[0.3, 0.2, 1.0, 0.1]])
        y = preamble_rx(ps, taps, [7], extra=40)
        est = estimate_timing(y, ps, 0, 20)
        assert est.delta == 7 + 2
        assert first_path(est, 4) == 7

    def test_ties_pick_smallest_lag(self):
        est = TimingEstimate(int(np.argmax([1.0, 3.0, 3.0])), 3.0, np.array([1.0, 3.0, 3.0]))
        assert est.delta == 1

    def test_range_exceeds_signal(self):
        with pytest.raises(ValueError, match="search_range"):
            estimate_timing(np.ones(272 + 10), self.ps, 0, 11)

    def test_bad_user(self):
        with pytest.raises(ValueError):
            estimate_timing(np.ones(400), self.ps, 2, 10)


class TestChannelEstimation:
    def test_identity_channel(self):
        ps = build_preamble_set(ZcParams(64, 5), 1, 4, 8)
        taps = np.array([[1, 0, 0, 0]], dtype=complex)
        est = estimate_channels(ps.z[0], ps)
        assert np.max(np.abs(est.h - taps)) < 1e-10

    def test_five_users_exact(self, rng):
        ps = build_preamble_set(ZcParams(256, 25), 5, 8, 16, 8)
        taps = crandn(rng, 5, 8)
        y = preamble_rx(ps, taps, rng=rng)
        est = estimate_channels(y[16:16 + 256], ps)
        assert np.max(np.abs(est.h - taps)) < 1e-9
        assert nmse(est, taps) < 1e-18

    def test_matched_filter_structure(self, rng):
        ps = build_preamble_set(ZcParams(64, 5), 2, 4, 8)
        mf = matched_filter(crandn(rng, 64), ps)
        np.testing.assert_allclose(mf.g, idft(mf.G), atol=1e-14)
        with pytest.raises(ValueError):
            matched_filter(np.ones(63), ps)

    def test_gains_match_circular_channel(self, rng):
        N = 32
        taps = crandn(rng, 1, 3)
        est = ChannelEstimate.from_taps(taps, N)
        x = crandn(rng, N)
        from uplink_noma.dsp import circular_convolve, dft
        np.testing.assert_allclose(dft(circular_convolve(x, taps[0])), est.gains[0] * dft(x), atol=1e-12)

    def test_overlap_rejected(self):
        ps = build_preamble_set(ZcParams(64, 5), 2, 4, 8)
        object.__setattr__(ps, "D", 2)
        with pytest.raises(ValueError):
            estimate_channels(np.ones(64), ps)

    def test_nmse_trend(self):
        rng = np.random.default_rng(3)
        out = {}
        for M in (2, 5):
            ps = build_preamble_set(ZcParams(256, 25), M, 8, 16)
            for snr in (0, 10, 20):
                err = pw = 0.0
                for _ in range(100):
                    ch = draw_channel(M, 8, "exponential", rng)
                    frames = [ps.z_cp[m].samples for m in range(M)]
                    y = compose_uplink(frames, ch, NoiseSpec(snr, M), rng, length=272)
                    e = estimate_channels(y[16:], ps)
                    err += np.sum(np.abs(e.h - ch.taps) ** 2)
                    pw += np.sum(np.abs(ch.taps) ** 2)
                out[M, snr] = err / pw
        assert out[2, 0] > out[2, 10] > out[2, 20]
        assert out[5, 0] > out[5, 10] > out[5, 20]
        assert all(out[5, s] > out[2, s] for s in (0, 10, 20))


class TestCfo:
    pss = generate_pss(25)

    def burst(self, eps, lead=20, tail=30, h=1.0):
        x = np.concatenate([np.zeros(lead), self.pss, np.zeros(tail)])
        return h * apply_cfo(x, eps)

    def test_zero_cfo(self):
        assert abs(estimate_cfo(self.burst(0.0), self.pss).eps) < 1e-12

    @pytest.mark.parametrize("eps", [0.002, 0.001, -0.001, 0.005, -0.005, 0.007])
    def test_noiseless_exact(self, eps):
        est = estimate_cfo(self.burst(eps, h=0.7 * np.exp(1.1j)), self.pss)
        assert abs(est.eps - eps) < 1e-6
        assert est.position == 20 and est.confidence > 0.4

    def test_coarse_search_limit(self):
        # past half a subcarrier the ZC peak slides to another lag
        assert estimate_cfo(self.burst(0.010), self.pss).position != 20

    def test_repetitions_noiseless(self):
        rx = apply_cfo(np.concatenate([np.zeros(5), np.tile(self.pss, 4), np.zeros(63)]), 0.003)
        est = estimate_cfo(rx, self.pss, repetitions=4, period=63)
        assert abs(est.eps - 0.003) < 1e-9

    def test_reference_not_found(self):
        noise = awgn(300, 1.0, np.random.default_rng(0))
        with pytest.raises(ReferenceNotFound):
            estimate_cfo(noise, self.pss)

    def test_bad_period(self):
        with pytest.raises(ValueError):
            estimate_cfo(self.burst(0.0), self.pss, repetitions=2)

    def test_unbiased_at_high_snr(self):
        rng = np.random.default_rng(8)
        eps = 0.002
        vals = [estimate_cfo(self.burst(eps) + awgn(113, 0.01, rng), self.pss).eps for _ in range(1000)]
        assert abs(np.mean(vals) - eps) < 0.01 * eps

    def test_compensation(self, rng):
        x = crandn(rng, 200)
        assert np.max(np.abs(compensate_cfo(apply_cfo(x, 0.004), 0.004) - x)) < 1e-12
        np.testing.assert_array_equal(compensate_cfo(x, 0.0), x)

    def test_residual_drift(self):
        N, eps, eps_hat = 256, 0.003, 0.0025
        r = compensate_cfo(apply_cfo(np.ones(N + 1), eps), eps_hat)
        assert np.angle(r[N] / r[0]) == pytest.approx(np.angle(np.exp(2j * np.pi * (eps - eps_hat) * N)))
