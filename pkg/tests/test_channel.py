import numpy as np
import pytest

from conftest import crandn
from uplink_noma.channel import (ChannelRealization, NoiseSpec, apply_cfo, apply_channel, awgn,
                                 compose_uplink, draw_channel, draw_multipath, power_profile)


class TestMultipath:
    @pytest.mark.parametrize("profile", ["uniform", "exponential", "phase"])
    def test_profile_normalised(self, profile):
        p = power_profile(5, profile)
        assert abs(p.sum() - 1) < 1e-12

    def test_exponential_decay(self):
        p = power_profile(3, "exponential")
        assert np.allclose(p[1:] / p[:-1], np.exp(-1))

    @pytest.mark.parametrize("L_p,profile", [(1, "uniform"), (4, "exponential"), (8, "uniform")])
    def test_unit_average_energy(self, L_p, profile):
        rng = np.random.default_rng(7)
        e = [np.sum(np.abs(draw_multipath(L_p, profile, rng)) ** 2) for _ in range(100_000)]
        assert 0.99 <= np.mean(e) <= 1.01

    def test_phase_profile_is_unfaded(self, rng):
        h = draw_multipath(4, "phase", rng)
        np.testing.assert_allclose(np.abs(h) ** 2, 0.25)

    def test_seeded(self):
        np.testing.assert_array_equal(draw_multipath(4, "exponential", 3), draw_multipath(4, "exponential", 3))

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            draw_multipath(2, "ricean", 0)

    def test_draw_channel_ranges(self, rng):
        ch = draw_channel(50, 3, "uniform", rng, max_offset=10, cfo_max=0.01)
        assert ch.taps.shape == (50, 3)
        assert ch.offsets.min() >= 0 and ch.offsets.max() <= 10
        assert np.all(np.abs(ch.cfo) <= 0.01)

    def test_realization_rejects_negative_offset(self):
        with pytest.raises(ValueError):
            ChannelRealization(np.ones((1, 1)), [0.0], [-1])


class TestImpairments:
    def test_identity_and_delay(self, rng):
        x = crandn(rng, 10)
        np.testing.assert_array_equal(apply_channel(x, [1]), x)
        np.testing.assert_array_equal(apply_channel(x, [0, 1]), np.concatenate([[0], x]))

    def test_convolution_oracle(self, rng):
        x, h = crandn(rng, 64), crandn(rng, 5)
        ref = np.array([sum(h[l] * x[n - l] for l in range(5) if 0 <= n - l < 64) for n in range(68)])
        assert np.max(np.abs(apply_channel(x, h) - ref)) < 1e-12

    def test_cfo(self, rng):
        x = crandn(rng, 20)
        np.testing.assert_array_equal(apply_cfo(x, 0.0), x)
        np.testing.assert_allclose(apply_cfo(np.ones(6), 0.5), [1, -1, 1, -1, 1, -1], atol=1e-12)
        assert np.max(np.abs(apply_cfo(apply_cfo(x, 0.013), -0.013) - x)) < 1e-12

    def test_noise_spec(self):
        assert NoiseSpec(10).sigma2 == pytest.approx(0.1)
        assert NoiseSpec(0, signal_power=2.0).sigma2 == pytest.approx(2.0)
        assert NoiseSpec(np.inf).sigma2 == 0.0

    def test_awgn_stream_alignment(self):
        a = awgn(100, 0.0, np.random.default_rng(1))
        b = awgn(100, 1.0, np.random.default_rng(1))
        assert np.all(a == 0) and np.any(b != 0)


class TestCompose:
    def test_transparent(self, rng):
        f = crandn(rng, 50)
        y = compose_uplink([f], ChannelRealization.ideal(1), NoiseSpec(np.inf), rng, length=60)
        np.testing.assert_array_equal(y, np.concatenate([f, np.zeros(10)]))

    def test_superposition(self, rng):
        f1, f2 = crandn(rng, 40), crandn(rng, 40)
        y = compose_uplink([f1, f2], ChannelRealization.ideal(2), NoiseSpec(np.inf), rng)
        np.testing.assert_allclose(y, f1 + f2, atol=1e-15)

    def test_linearity_over_users(self, rng):
        frames = [crandn(rng, 64) for _ in range(3)]
        ch = draw_channel(3, 4, "exponential", rng, max_offset=6, cfo_max=0.01)
        n = 64 + 6 + 3
        total = compose_uplink(frames, ch, NoiseSpec(np.inf), rng, length=n)
        parts = sum(compose_uplink([frames[m]], ChannelRealization(ch.taps[m:m + 1], ch.cfo[m:m + 1],
                                                                   ch.offsets[m:m + 1]),
                                   NoiseSpec(np.inf), rng, length=n) for m in range(3))
        assert np.max(np.abs(total - parts)) < 1e-10

    def test_delay_then_channel(self):
        f = np.array([1, 2, 3], dtype=complex)
        ch = ChannelRealization(np.array([[1, 0.5]]), [0.0], [2])
        y = compose_uplink([f], ch, NoiseSpec(np.inf), 0)
        np.testing.assert_allclose(y, [0, 0, 1, 2.5, 4, 1.5])

    def test_noise_calibration(self):
        rng = np.random.default_rng(11)
        f = crandn(rng, 100_000)
        clean = compose_uplink([f], ChannelRealization.ideal(1), NoiseSpec(np.inf), 5)
        noisy = compose_uplink([f], ChannelRealization.ideal(1), NoiseSpec(3.0), 5)
        var = np.var(noisy - clean)
        assert abs(var / NoiseSpec(3.0).sigma2 - 1) < 0.02

    def test_inconsistent_lengths(self, rng):
        with pytest.raises(ValueError):
            compose_uplink([np.ones(4), np.ones(5)], ChannelRealization.ideal(2), NoiseSpec(10), rng)

    def test_deterministic(self, rng):
        f = crandn(rng, 30)
        ch = draw_channel(1, 2, "uniform", 4)
        a = compose_uplink([f], ch, NoiseSpec(5), 9)
        b = compose_uplink([f], ch, NoiseSpec(5), 9)
        np.testing.assert_array_equal(a, b)
