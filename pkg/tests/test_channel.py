"""Channel model tests: mappings, noise statistics, reproducible streams."""

import math

import numpy as np
import pytest

from jncld import (
    ChannelParams,
    RngStream,
    bpsk_modulate,
    mac_awgn,
    mac_complex,
    p2p_awgn,
    sigma2_from_snr,
)

TINY = 1e-30  # suppresses noise without violating sigma2 > 0


class TestBpsk:
    def test_mapping_rule(self):
        np.testing.assert_array_equal(bpsk_modulate([0, 1, 0]), [-1.0, 1.0, -1.0])

    def test_empty(self):
        assert bpsk_modulate(np.array([], dtype=np.uint8)).size == 0

    def test_all_ones(self):
        np.testing.assert_array_equal(bpsk_modulate(np.ones(5, dtype=int)), np.ones(5))

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            bpsk_modulate([0, 2, 1])


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(42, (1, 2))
        b = RngStream(42, (1, 2))
        np.testing.assert_array_equal(a.normal(101), b.normal(101))
        np.testing.assert_array_equal(a.bits(50), b.bits(50))
        np.testing.assert_array_equal(a.uniform(10, 0, 2 * np.pi), b.uniform(10, 0, 2 * np.pi))

    def test_streams_differ(self):
        a = RngStream(42, (1,)).normal(64)
        b = RngStream(42, (2,)).normal(64)
        c = RngStream(43, (1,)).normal(64)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_derive_matches_direct_construction(self):
        np.testing.assert_array_equal(
            RngStream(7, (3,)).derive(9).normal(16), RngStream(7, (3, 9)).normal(16)
        )

    def test_normal_moments(self):
        z = RngStream(0, (0,)).normal(1_000_000)
        assert abs(z.mean()) < 4e-3
        assert abs(z.var() - 1.0) < 1e-2


class TestMacAwgn:
    def test_symmetric_cancellation(self):
        p = ChannelParams(sigma2=TINY)
        y = mac_awgn(np.ones(4), -np.ones(4), p, RngStream(1))
        np.testing.assert_allclose(y, 0.0, atol=1e-12)

    def test_deterministic_part_with_power_split(self):
        p = ChannelParams.from_power_split(2 / 3, 2.0, sigma2=TINY)
        y = mac_awgn(np.ones(3), np.ones(3), p, RngStream(1))
        np.testing.assert_allclose(y, math.sqrt(4 / 5) + math.sqrt(6 / 5), atol=1e-12)

    def test_sample_mean(self):
        n = 1_000_000
        p = ChannelParams(sigma2=0.7)
        y = mac_awgn(np.ones(n), -np.ones(n), p, RngStream(11, (0,)))
        # deterministic part cancels; mean of pure noise within 4 sigma/sqrt(n)
        assert abs(y.mean()) < 4 * math.sqrt(0.7 / n)
        assert abs(y.var() - 0.7) / 0.7 < 0.01

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mac_awgn(np.ones(3), np.ones(4), ChannelParams(), RngStream(1))


class TestMacComplex:
    def test_phase_zero_reduces_to_real_channel(self):
        # with shared streams, Re(complex output at sigma2=s) is bit-identical
        # to the real channel at sigma2=s/2, and Im carries only noise
        p = ChannelParams.from_power_split(2 / 3, 2.0, sigma2=0.8)
        x_a, x_b = np.ones(6), -np.ones(6)
        yc = mac_complex(x_a, x_b, p, RngStream(3, (1,)))
        z = RngStream(3, (1,)).normal(12)
        expect_re = p.amp_a * x_a + p.amp_b * x_b + math.sqrt(0.8 / 2) * z[:6]
        expect_im = math.sqrt(0.8 / 2) * z[6:]
        np.testing.assert_array_equal(yc.real, expect_re)
        np.testing.assert_array_equal(yc.imag, expect_im)

    def test_phase_pi_rotation(self):
        p = ChannelParams(rho_b=0.0, theta_a=math.pi, sigma2=TINY)
        y = mac_complex(np.ones(2), np.ones(2), p, RngStream(1))
        np.testing.assert_allclose(y.real, -1.0, atol=1e-12)
        np.testing.assert_allclose(y.imag, 0.0, atol=1e-12)

    def test_noise_variance(self):
        n = 1_000_000
        p = ChannelParams(rho_a=0.0, rho_b=0.0, sigma2=1.3)
        y = mac_complex(np.zeros(n), np.zeros(n), p, RngStream(4, (0,)))
        total = np.mean(np.abs(y) ** 2)
        assert abs(total - 1.3) / 1.3 < 0.01
        # circular symmetry: the two dimensions split the variance evenly
        assert abs(y.real.var() - 0.65) / 0.65 < 0.02
        assert abs(y.imag.var() - 0.65) / 0.65 < 0.02


class TestP2pAwgn:
    def test_noiseless_identity(self):
        y = p2p_awgn(np.array([1.0, -1.0]), TINY, RngStream(2))
        np.testing.assert_allclose(y, [1.0, -1.0], atol=1e-12)

    def test_moments(self):
        n = 1_000_000
        y = p2p_awgn(np.ones(n), 0.5, RngStream(5, (0,)))
        assert abs(y.mean() - 1.0) < 4 * math.sqrt(0.5 / n)
        assert abs(y.var() - 0.5) / 0.5 < 0.01

    def test_length_preserved(self):
        for n in (1, 7, 64):
            assert p2p_awgn(np.ones(n), 1.0, RngStream(1)).shape == (n,)


class TestSigmaFromSnr:
    def test_zero_db(self):
        p = ChannelParams.from_power_split(2 / 3, 2.0)
        assert sigma2_from_snr(0.0, p) == pytest.approx(2.0, abs=1e-12)

    def test_three_db(self):
        p = ChannelParams.from_power_split(2 / 3, 2.0)
        assert sigma2_from_snr(3.0103, p) == pytest.approx(1.0, abs=1e-5)

    def test_monotone_decreasing(self):
        p = ChannelParams()
        vals = [sigma2_from_snr(s, p) for s in np.linspace(-10, 30, 41)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestChannelParams:
    def test_power_split_resolver(self):
        for ratio, total in [(2 / 3, 2.0), (1.0, 2.0), (5.0, 3.7), (0.01, 1.0)]:
            p = ChannelParams.from_power_split(ratio, total, h_a=1.3, h_b=0.7)
            assert p.total_power == pytest.approx(total, abs=1e-12)
            got_ratio = (p.amp_a ** 2) / (p.amp_b ** 2)
            assert got_ratio == pytest.approx(ratio, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            ChannelParams(sigma2=0.0)
        with pytest.raises(ValueError):
            ChannelParams(rho_a=-0.1)
        with pytest.raises(ValueError):
            ChannelParams(theta_a=2 * math.pi)
        with pytest.raises(ValueError):
            ChannelParams.from_power_split(-1.0, 2.0)

    def test_gain_properties(self):
        p = ChannelParams(h_a=2.0, rho_a=0.5, theta_a=math.pi / 2)
        assert p.amp_a == pytest.approx(1.0)
        assert p.gain_a == pytest.approx(1j, abs=1e-12)
