import numpy as np
import pytest
from scipy.stats import kstest

from mcsic.channel import (
    ChannelRealization,
    FadingSpec,
    awgn_chips,
    bessel_j0,
    convert_df_to_rho,
    generate_fading,
)

trapz = getattr(np, "trapezoid", None) or np.trapz


def j0_series_oracle(x):
    # power series sum_k (-1)^k (x/2)^(2k) / (k!)^2, good for |x| <= 8
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        term *= -((x / 2.0) ** 2) / (k * k)
        total += term
    return total


def j0_quadrature_oracle(x):
    # (1/pi) integral_0^pi cos(x sin t) dt; integrand has flat endpoints so
    # the trapezoid rule converges far past 1e-10 at this resolution
    t = np.linspace(0.0, np.pi, 20001)
    return trapz(np.cos(x * np.sin(t)), t) / np.pi


class TestBesselJ0:
    def test_known_points(self):
        assert bessel_j0(0.0) == pytest.approx(1.0, abs=1e-12)
        assert bessel_j0(1.0) == pytest.approx(0.7651976865579665, abs=1e-10)
        assert abs(bessel_j0(2.404826)) < 1e-6  # first zero

    def test_against_series(self):
        for x in np.linspace(-8, 8, 81):
            assert abs(bessel_j0(x) - j0_series_oracle(x)) < 1e-7

    def test_against_quadrature_to_50(self):
        for x in np.linspace(0, 50, 101):
            assert abs(bessel_j0(x) - j0_quadrature_oracle(x)) < 1e-7


class TestConvertDfToRho:
    def test_values(self):
        assert convert_df_to_rho(0.0) == pytest.approx(1.0, abs=1e-12)
        assert convert_df_to_rho(1.0) == pytest.approx(0.70711, abs=1e-5)
        assert convert_df_to_rho(1e9) < 1e-6

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            convert_df_to_rho(-0.1)


class TestFadingSpec:
    def test_valid(self):
        spec = FadingSpec(fD_Tb=0.003, rho=0.8, L=2)
        assert spec.num_oscillators == 64

    @pytest.mark.parametrize("rho", [-0.1, 1.1])
    def test_rho_out_of_range(self, rho):
        with pytest.raises(ValueError):
            FadingSpec(fD_Tb=0.003, rho=rho, L=2)

    def test_bad_doppler(self):
        with pytest.raises(ValueError):
            FadingSpec(fD_Tb=0.0, rho=0.0, L=2)


M_STAT = 1_000_000


def complex_process(real: ChannelRealization, k, l):
    return real.gains[k, l] * np.exp(1j * real.phases[k, l])


def lagged_crosscorr(u, v, lag):
    # Re E[u(t) v*(t+lag)] normalized by the geometric mean power
    a = u[: len(u) - lag] if lag else u
    b = v[lag:] if lag else v
    num = float(np.mean(a * np.conj(b)).real)
    den = np.sqrt(float(np.mean(np.abs(u) ** 2)) * float(np.mean(np.abs(v) ** 2)))
    return num / den


# fast fading decorrelates successive symbols, so the sample estimates below
# concentrate at the 1/sqrt(M) rate the tolerances assume
@pytest.fixture(scope="module")
def fast_uncorrelated():
    spec = FadingSpec(fD_Tb=0.45, rho=0.0, L=2)
    return generate_fading(spec, K=2, M=M_STAT, rng=np.random.default_rng(7))


@pytest.fixture(scope="module")
def slow_uncorrelated():
    spec = FadingSpec(fD_Tb=0.003, rho=0.0, L=2)
    return generate_fading(spec, K=1, M=M_STAT, rng=np.random.default_rng(11))


@pytest.fixture(scope="module")
def slow_correlated():
    spec = FadingSpec(fD_Tb=0.003, rho=0.8, L=2)
    return generate_fading(spec, K=1, M=M_STAT, rng=np.random.default_rng(13))


@pytest.fixture(scope="module")
def fast_correlated():
    spec = FadingSpec(fD_Tb=0.45, rho=0.8, L=2)
    return generate_fading(spec, K=1, M=M_STAT, rng=np.random.default_rng(17))


class TestFadingStatistics:
    def test_unit_power(self, fast_uncorrelated):
        for k in range(2):
            for l in range(2):
                p = float(np.mean(fast_uncorrelated.gains[k, l] ** 2))
                assert 0.99 <= p <= 1.01

    def test_rayleigh_envelope_ks(self, fast_uncorrelated):
        g = fast_uncorrelated.gains[0, 0]
        stat = kstest(g, lambda x: 1.0 - np.exp(-(x**2))).statistic
        assert stat < 0.005

    def test_gains_nonnegative(self, fast_uncorrelated):
        assert np.all(fast_uncorrelated.gains >= 0)

    def test_autocorrelation_matches_bessel(self, slow_uncorrelated):
        u = complex_process(slow_uncorrelated, 0, 0)
        for lag in range(1, 101):
            want = bessel_j0(2.0 * np.pi * 0.003 * lag)
            got = lagged_crosscorr(u, u, lag)
            assert abs(got - want) < 0.02, f"lag {lag}: {got} vs {want}"

    def test_cross_branch_uncorrelated(self, fast_uncorrelated):
        u0 = complex_process(fast_uncorrelated, 0, 0)
        u1 = complex_process(fast_uncorrelated, 0, 1)
        assert abs(lagged_crosscorr(u0, u1, 0)) < 3e-3

    def test_cross_branch_uncorrelated_slow(self, slow_uncorrelated):
        u0 = complex_process(slow_uncorrelated, 0, 0)
        u1 = complex_process(slow_uncorrelated, 0, 1)
        assert abs(lagged_crosscorr(u0, u1, 0)) < 0.02

    def test_cross_branch_correlated_example(self, fast_correlated):
        u0 = complex_process(fast_correlated, 0, 0)
        u1 = complex_process(fast_correlated, 0, 1)
        assert abs(lagged_crosscorr(u0, u1, 0) - 0.8) < 0.01

    def test_cross_branch_correlated_invariant(self, slow_correlated):
        u0 = complex_process(slow_correlated, 0, 0)
        u1 = complex_process(slow_correlated, 0, 1)
        assert abs(lagged_crosscorr(u0, u1, 0) - 0.8) < 0.02

    def test_separable_lagged_cross_correlation(self, slow_correlated):
        # product form: cross(lag) ~ rho * J0(2 pi fD lag)
        u0 = complex_process(slow_correlated, 0, 0)
        u1 = complex_process(slow_correlated, 0, 1)
        for lag in (1, 10, 50, 100):
            want = 0.8 * bessel_j0(2.0 * np.pi * 0.003 * lag)
            got = lagged_crosscorr(u0, u1, lag)
            assert abs(got - want) < 0.03, f"lag {lag}: {got} vs {want}"

    def test_users_independent(self, fast_uncorrelated):
        u0 = complex_process(fast_uncorrelated, 0, 0)
        u1 = complex_process(fast_uncorrelated, 1, 0)
        assert abs(lagged_crosscorr(u0, u1, 0)) < 3.0 / np.sqrt(M_STAT)


class TestFadingStructure:
    def test_deterministic(self):
        spec = FadingSpec(fD_Tb=0.003, rho=0.4, L=2)
        a = generate_fading(spec, K=3, M=500, rng=np.random.default_rng(5))
        b = generate_fading(spec, K=3, M=500, rng=np.random.default_rng(5))
        assert np.array_equal(a.gains, b.gains)
        assert np.array_equal(a.phases, b.phases)

    def test_draws_do_not_depend_on_rho(self):
        # common random numbers: same stream, different rho, same first branch
        for rho in (0.0, 0.4, 0.8):
            r = generate_fading(
                FadingSpec(fD_Tb=0.003, rho=rho, L=2),
                K=1,
                M=200,
                rng=np.random.default_rng(9),
            )
            if rho == 0.0:
                base = r.gains[0, 0].copy()
            else:
                assert np.array_equal(r.gains[0, 0], base)

    def test_rho_one_duplicates_branch(self):
        r = generate_fading(
            FadingSpec(fD_Tb=0.003, rho=1.0, L=2),
            K=1,
            M=300,
            rng=np.random.default_rng(3),
        )
        assert np.allclose(r.gains[0, 0], r.gains[0, 1])

    def test_shapes(self):
        r = generate_fading(
            FadingSpec(fD_Tb=0.01, rho=0.2, L=3),
            K=4,
            M=50,
            rng=np.random.default_rng(1),
        )
        assert r.gains.shape == (4, 3, 50)
        assert r.phases.shape == (4, 3, 50)

    def test_bad_sizes_rejected(self):
        spec = FadingSpec(fD_Tb=0.01, rho=0.2, L=2)
        with pytest.raises(ValueError):
            generate_fading(spec, K=0, M=10, rng=np.random.default_rng(1))
        with pytest.raises(ValueError):
            generate_fading(spec, K=1, M=0, rng=np.random.default_rng(1))


class TestAwgn:
    def test_zero_sigma(self):
        out = awgn_chips((2, 31), 0.0, np.random.default_rng(1))
        assert np.all(out == 0.0)

    def test_variance(self):
        out = awgn_chips((1000, 1000), 1.0, np.random.default_rng(2))
        assert 0.995 <= float(np.var(out)) <= 1.005

    def test_deterministic(self):
        a = awgn_chips((4, 31), 0.3, np.random.default_rng(42))
        b = awgn_chips((4, 31), 0.3, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            awgn_chips((2, 2), -1.0, np.random.default_rng(1))
