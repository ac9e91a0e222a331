"""LLR frontend tests.

The brute-force four-hypothesis demappers are the reference for the
closed forms; the MMSE baseline's exact moment engine is checked against
Monte Carlo moment estimates.
"""

import math

import numpy as np
import pytest

from jncld import (
    ChannelParams,
    LLR_CLAMP,
    brute_force_llr_awgn,
    brute_force_llr_complex,
    jncld_llr_awgn,
    jncld_llr_complex,
    mmse_llr,
    p2p_bpsk_llr,
)
from jncld.pnc import _hypothesis_feature_moments

TWO_PI = 2.0 * math.pi


def random_params(rng, n, complex_phases=False):
    kw = {}
    if complex_phases:
        kw = dict(theta_a=rng.uniform(0, TWO_PI, n), theta_b=rng.uniform(0, TWO_PI, n))
    return ChannelParams(
        h_a=rng.uniform(0.1, 2.0, n),
        h_b=rng.uniform(0.1, 2.0, n),
        rho_a=rng.uniform(0.1, 2.0, n),
        rho_b=rng.uniform(0.1, 2.0, n),
        sigma2=rng.uniform(0.05, 4.0, n),
        **kw,
    )


class TestRealClosedForm:
    def test_midpoint_value(self):
        # cosh(0) = 1 kills both log terms, leaving the 2ab/sigma2 lead
        p = ChannelParams(rho_a=1.3, rho_b=0.4, sigma2=0.7)
        lam = jncld_llr_awgn(np.array([0.0]), p)
        assert lam[0] == pytest.approx(2 * 1.3 * 0.4 / 0.7, abs=1e-12)
        assert lam[0] > 0

    def test_known_point(self):
        # a=b=1, sigma2=1, y=2: 2 - log(cosh(4)), evaluated independently
        expected = 2.0 - (4.0 + math.log1p(math.exp(-8.0)) - math.log(2.0))
        p = ChannelParams(sigma2=1.0)
        assert jncld_llr_awgn(np.array([2.0]), p)[0] == pytest.approx(expected, abs=1e-12)
        assert brute_force_llr_awgn(np.array([2.0]), p)[0] == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(-1.3071882258, abs=1e-9)

    def test_even_in_y_for_equal_powers(self):
        p = ChannelParams(rho_a=0.9, rho_b=0.9, sigma2=0.5)
        y = np.linspace(-5, 5, 41)
        np.testing.assert_allclose(jncld_llr_awgn(y, p), jncld_llr_awgn(-y, p), atol=1e-12)

    def test_matches_brute_force_randomized(self):
        rng = np.random.default_rng(1)
        n = 10_000
        p = random_params(rng, n)
        y = rng.uniform(-6, 6, n)
        diff = np.abs(jncld_llr_awgn(y, p) - brute_force_llr_awgn(y, p))
        assert diff.max() < 1e-9

    def test_brute_force_midpoint(self):
        assert brute_force_llr_awgn(np.array([0.0]), ChannelParams(sigma2=1.0))[0] == \
            pytest.approx(2.0, abs=1e-12)

    def test_vanishing_information_limit(self):
        p = ChannelParams(sigma2=1e9)
        y = np.linspace(-6, 6, 13)
        assert np.abs(brute_force_llr_awgn(y, p)).max() < 1e-6
        assert np.abs(jncld_llr_awgn(y, p)).max() < 1e-6

    def test_swap_symmetry(self):
        y = np.linspace(-4, 4, 17)
        p1 = ChannelParams(rho_a=0.4, rho_b=1.7, sigma2=0.8)
        p2 = ChannelParams(rho_a=1.7, rho_b=0.4, sigma2=0.8)
        np.testing.assert_allclose(jncld_llr_awgn(y, p1), jncld_llr_awgn(y, p2), atol=1e-12)

    def test_sign_geometry(self):
        # equal powers: midpoint favors XOR=1, outer points favor XOR=0
        a = 1.0
        p = ChannelParams(sigma2=0.5)
        assert jncld_llr_awgn(np.array([0.0]), p)[0] > 0
        assert jncld_llr_awgn(np.array([2 * a]), p)[0] < 0
        assert jncld_llr_awgn(np.array([-2 * a]), p)[0] < 0

    def test_outputs_clamped_and_finite(self):
        p = ChannelParams(sigma2=1e-4)
        lam = jncld_llr_awgn(np.array([0.0, 2.0, -2.0, 6.0]), p)
        assert np.all(np.isfinite(lam))
        assert np.abs(lam).max() <= LLR_CLAMP


class TestComplexClosedForm:
    def test_y_zero_identity(self):
        p = ChannelParams(rho_a=1.2, rho_b=0.5, theta_a=0.7, theta_b=2.1, sigma2=0.9)
        lam = jncld_llr_complex(np.array([0.0 + 0.0j]), p)
        expected = 4.0 * np.real(p.gain_a * np.conj(p.gain_b)) / 0.9
        assert lam[0] == pytest.approx(expected, abs=1e-12)

    def test_matches_brute_force_randomized(self):
        rng = np.random.default_rng(2)
        n = 10_000
        p = random_params(rng, n, complex_phases=True)
        y = 6 * np.sqrt(rng.random(n)) * np.exp(1j * rng.uniform(0, TWO_PI, n))
        diff = np.abs(jncld_llr_complex(y, p) - brute_force_llr_complex(y, p))
        assert diff.max() < 1e-9

    def test_phase_zero_reduction_to_real(self):
        # complex channel at sigma2=s carries s/2 noise per dimension, so on
        # real-valued samples it must agree with the real channel at s/2
        p = ChannelParams(rho_a=0.8, rho_b=1.1, sigma2=0.9)
        y = np.linspace(-5, 5, 31)
        np.testing.assert_allclose(
            jncld_llr_complex(y.astype(complex), p),
            jncld_llr_awgn(y, p.replace(sigma2=0.45)),
            atol=1e-10,
        )

    def test_opposed_gains_geometry(self):
        # g_b = -g_a: XOR=1 points collapse to +-2g_a, XOR=0 points to 0
        p = ChannelParams(theta_a=0.5, theta_b=0.5 + math.pi, sigma2=0.6)
        y = np.exp(1j * 0.5) * np.linspace(-4, 4, 33)
        lam = jncld_llr_complex(y, p)
        np.testing.assert_allclose(lam, brute_force_llr_complex(y, p), atol=1e-9)
        assert lam[0] > 0 and lam[-1] > 0  # near +-2g_a
        assert lam[16] < 0  # y = 0

    def test_silent_source_gives_zero(self):
        p = ChannelParams(rho_b=0.0, sigma2=0.8, theta_a=1.0)
        rng = np.random.default_rng(3)
        y = rng.normal(size=50) + 1j * rng.normal(size=50)
        np.testing.assert_allclose(brute_force_llr_complex(y, p), 0.0, atol=1e-12)
        np.testing.assert_allclose(jncld_llr_complex(y, p), 0.0, atol=1e-12)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(4)
        y = rng.normal(size=40) + 1j * rng.normal(size=40)
        p = ChannelParams(rho_a=1.1, rho_b=0.6, theta_a=0.4, theta_b=1.9, sigma2=0.7)
        for phi in (0.3, 1.2, math.pi):
            shifted = ChannelParams(
                rho_a=1.1, rho_b=0.6,
                theta_a=(0.4 + phi) % TWO_PI, theta_b=(1.9 + phi) % TWO_PI,
                sigma2=0.7,
            )
            np.testing.assert_allclose(
                jncld_llr_complex(y * np.exp(1j * phi), shifted),
                jncld_llr_complex(y, p),
                atol=1e-9,
            )


class TestMmse:
    def test_midpoint_favors_xor_one(self):
        p = ChannelParams(sigma2=1e-6)
        assert mmse_llr(np.array([0.0]), p)[0] > 0

    def test_llr_vanishes_with_noise(self):
        p = ChannelParams(sigma2=1e9)
        lam = mmse_llr(np.linspace(-4, 4, 9), p)
        assert np.abs(lam).max() < 1e-6

    def test_high_snr_signs_real(self):
        p = ChannelParams.from_power_split(2 / 3, 2.0, sigma2=1e-3)
        inner = p.amp_a - p.amp_b
        outer = p.amp_a + p.amp_b
        lam = mmse_llr(np.array([inner, -inner, outer, -outer]), p)
        assert lam[0] > 0 and lam[1] > 0
        assert lam[2] < 0 and lam[3] < 0

    def test_high_snr_signs_complex(self):
        p = ChannelParams(rho_a=1.0, rho_b=0.8, theta_a=0.9, theta_b=2.4, sigma2=1e-3)
        g_a, g_b = p.gain_a, p.gain_b
        y = np.array([g_a - g_b, g_b - g_a, g_a + g_b, -(g_a + g_b)])
        lam = mmse_llr(y, p)
        assert lam[0] > 0 and lam[1] > 0
        assert lam[2] < 0 and lam[3] < 0

    def test_finite_and_clamped(self):
        for s2 in (1e-9, 1e-3, 1.0, 1e6):
            p = ChannelParams(sigma2=s2)
            lam = mmse_llr(np.linspace(-6, 6, 25), p)
            assert np.all(np.isfinite(lam))
            assert np.abs(lam).max() <= LLR_CLAMP

    def test_real_moments_match_monte_carlo(self):
        # independent oracle for the analytic second-order statistics
        rng = np.random.default_rng(10)
        a, b, s2 = 0.9, 1.2, 0.6
        n = 2_000_000
        x_a = rng.choice([-1.0, 1.0], n)
        x_b = rng.choice([-1.0, 1.0], n)
        y = a * x_a + b * x_b + rng.normal(0, math.sqrt(s2), n)
        t = -x_a * x_b
        u = y * y
        cov_tu = np.mean(t * u)  # E[t] = 0
        var_u = u.var()
        assert cov_tu == pytest.approx(-2 * a * b, rel=0.01)
        expected_var = 4 * (a * b) ** 2 + 4 * (a * a + b * b) * s2 + 2 * s2 * s2
        assert var_u == pytest.approx(expected_var, rel=0.01)
        assert u.mean() == pytest.approx(a * a + b * b + s2, rel=0.01)

    def test_complex_moments_match_monte_carlo(self):
        rng = np.random.default_rng(11)
        p = ChannelParams(rho_a=1.1, rho_b=0.7, theta_a=0.8, theta_b=2.9, sigma2=0.9)
        g_a, g_b = complex(p.gain_a), complex(p.gain_b)
        n = 1_000_000
        x_a = rng.choice([-1.0, 1.0], n)
        x_b = rng.choice([-1.0, 1.0], n)
        noise = math.sqrt(0.45) * (rng.normal(size=n) + 1j * rng.normal(size=n))
        y = g_a * x_a + g_b * x_b + noise
        t = -x_a * x_b
        feats = np.stack([np.abs(y) ** 2, np.real(y * y), np.imag(y * y)], axis=-1)
        f_mean, cov_f, cov_tf = _hypothesis_feature_moments(g_a, g_b, 0.9)
        np.testing.assert_allclose(feats.mean(axis=0), f_mean, rtol=0.02, atol=0.01)
        emp_cov = np.cov(feats.T)
        np.testing.assert_allclose(emp_cov, cov_f, rtol=0.05, atol=0.05)
        emp_tf = (t[:, None] * feats).mean(axis=0)
        np.testing.assert_allclose(emp_tf, cov_tf, rtol=0.05, atol=0.02)


class TestP2pLlr:
    def test_unit_values(self):
        assert p2p_bpsk_llr(np.array([1.0]), 1.0)[0] == pytest.approx(2.0, abs=1e-15)
        assert p2p_bpsk_llr(np.array([0.0]), 1.0)[0] == 0.0

    def test_matches_log_density_ratio(self):
        rng = np.random.default_rng(5)
        y = rng.uniform(-4, 4, 200)
        for s2 in (0.3, 1.0, 2.5):
            ratio = (-((y - 1) ** 2) + (y + 1) ** 2) / (2 * s2)
            np.testing.assert_allclose(p2p_bpsk_llr(y, s2), ratio, atol=1e-12)
