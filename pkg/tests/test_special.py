import numpy as np
import pytest
from scipy.integrate import quad

from starcount.special import (
    Interval,
    chisq_quantile,
    chisq_sf,
    interval_stats,
    norm_cdf,
    norm_cdf_diff,
    norm_pdf,
    norm_quantile,
    truncnorm_moments,
)


def truncnorm_oracle(mu, sigma, lower, upper):
    """Adaptive quadrature of z^k * density over the interval."""
    lo = max(lower, mu - 45.0 * sigma)
    hi = min(upper, mu + 45.0 * sigma)

    def pdf(z):
        u = (z - mu) / sigma
        return np.exp(-0.5 * u * u) / (sigma * np.sqrt(2.0 * np.pi))

    mass = quad(pdf, lo, hi, epsabs=0, epsrel=1e-12, limit=500)[0]
    m1 = quad(lambda z: z * pdf(z), lo, hi, epsabs=0, epsrel=1e-12, limit=500)[0] / mass
    m2 = quad(lambda z: z * z * pdf(z), lo, hi, epsabs=0, epsrel=1e-12, limit=500)[0] / mass
    return m1, m2


class TestNormPdf:
    def test_at_zero(self):
        assert norm_pdf(0.0) == pytest.approx(1.0 / np.sqrt(2 * np.pi), abs=1e-15)

    def test_at_one(self):
        # cross-checked against a quadrature/erfc oracle
        assert norm_pdf(1.0) == pytest.approx(0.2419707245191434, abs=1e-15)

    def test_symmetry(self):
        assert norm_pdf(-1.0) == norm_pdf(1.0)
        assert norm_pdf(1.0) > 0.0


class TestNormCdf:
    def test_basic_values(self):
        assert norm_cdf(0.0) == 0.5
        assert norm_cdf(np.inf) == 1.0
        assert norm_cdf(-np.inf) == 0.0

    def test_against_integration_oracle(self):
        # frozen from quad(phi, -40, 1.96)
        assert norm_cdf(1.96) == pytest.approx(0.9750021048517795, abs=1e-15)

    def test_accuracy_central_and_tail(self):
        for x, expect in [(2.0, 0.9772498680518208), (-5.0, 2.866515719235352e-07)]:
            got = norm_cdf(x)
            assert got == pytest.approx(expect, rel=1e-12)

    def test_monotone(self):
        xs = np.linspace(-8, 8, 1001)
        vals = norm_cdf(xs)
        assert np.all(np.diff(vals) >= 0)


class TestNormQuantile:
    def test_median(self):
        assert norm_quantile(0.5) == 0.0

    def test_oracle_values(self):
        # frozen from bisection on a 50-digit normal CDF
        assert norm_quantile(0.975) == pytest.approx(1.9599639845400545, abs=1e-12)
        assert norm_quantile(0.2) == pytest.approx(-0.8416212335729142, abs=1e-12)

    def test_domain(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                norm_quantile(bad)

    def test_round_trip_million(self):
        # For x near +8 the CDF rounds to within one ulp of 1.0, which caps
        # the achievable quantile resolution near 0.01 in float64; the round
        # trip is therefore taken through the lower tail, using symmetry.
        rng = np.random.default_rng(7)
        x = rng.uniform(-8.0, 8.0, size=1_000_000)
        back = -norm_quantile(norm_cdf(-np.abs(x)))
        assert np.max(np.abs(back - np.abs(x))) <= 1e-9


class TestNormCdfDiff:
    def test_half_line(self):
        assert norm_cdf_diff(Interval(-np.inf, 0.0)) == pytest.approx(0.5, abs=1e-15)

    def test_far_tail_not_zero(self):
        # frozen from a 50-digit erfc oracle; naive Phi(9)-Phi(8) returns 0
        got = norm_cdf_diff(Interval(8.0, 9.0))
        assert got == pytest.approx(6.2198319858658303e-16, rel=1e-12)

    def test_symmetric_interval(self):
        # frozen: 2*Phi(1.96) - 1 from the integration oracle above
        got = norm_cdf_diff(Interval(-1.96, 1.96))
        assert got == pytest.approx(0.9500042097035591, abs=1e-14)

    def test_degenerate_interval_errors(self):
        with pytest.raises(ValueError):
            Interval(1.0, 1.0)
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)

    def test_underflow_clamp(self):
        assert norm_cdf_diff(Interval(100.0, 101.0)) == 1e-300

    def test_additivity(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            pts = np.sort(rng.uniform(-10, 10, size=3))
            a, b, c = pts
            if b - a < 1e-9 or c - b < 1e-9:
                continue
            lhs = norm_cdf_diff(Interval(a, b)) + norm_cdf_diff(Interval(b, c))
            rhs = norm_cdf_diff(Interval(a, c))
            assert lhs == pytest.approx(rhs, abs=1e-14)


class TestTruncnormMoments:
    def test_no_truncation(self):
        m1, m2 = truncnorm_moments(0.0, 1.0, Interval(-np.inf, np.inf))
        assert m1 == pytest.approx(0.0, abs=1e-15)
        assert m2 == pytest.approx(1.0, abs=1e-14)

    def test_half_normal(self):
        m1, m2 = truncnorm_moments(0.0, 1.0, Interval(0.0, np.inf))
        # frozen from adaptive integration of z*phi and z^2*phi on [0, 40]
        assert m1 == pytest.approx(0.7978845608028654, abs=1e-12)
        assert m2 == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_window(self):
        m1, m2 = truncnorm_moments(2.0, 0.5, Interval(1.5, 2.5))
        assert m1 == pytest.approx(2.0, abs=1e-12)
        # frozen from the quadrature oracle
        assert m2 == pytest.approx(4.072781273693199, abs=1e-10)

    def test_against_oracle_grid(self):
        rng = np.random.default_rng(3)
        cases = []
        for _ in range(40):
            mu = rng.uniform(-3, 3)
            sigma = rng.uniform(0.2, 2.5)
            lo = rng.uniform(-6, 5)
            cases.append((mu, sigma, lo, lo + rng.uniform(0.1, 4.0)))
            cases.append((mu, sigma, lo, np.inf))
            cases.append((mu, sigma, -np.inf, lo))
        for mu, sigma, lo, hi in cases:
            m1, m2 = truncnorm_moments(mu, sigma, Interval(lo, hi))
            o1, o2 = truncnorm_oracle(mu, sigma, lo, hi)
            assert m1 == pytest.approx(o1, abs=1e-8)
            assert m2 == pytest.approx(o2, abs=1e-8)

    def test_moment_ordering(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            mu = rng.uniform(-4, 4)
            sigma = rng.uniform(0.1, 3.0)
            lo = rng.uniform(-8, 8)
            hi = lo + rng.uniform(0.05, 6.0)
            m1, m2 = truncnorm_moments(mu, sigma, Interval(lo, hi))
            assert lo < m1 < hi
            assert m2 - m1 * m1 > 0.0

    def test_shift_invariance(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            mu = rng.uniform(-2, 2)
            sigma = rng.uniform(0.3, 2.0)
            lo = rng.uniform(-4, 3)
            hi = lo + rng.uniform(0.2, 3.0)
            delta = rng.uniform(-5, 5)
            m1a, _ = truncnorm_moments(mu, sigma, Interval(lo, hi))
            m1b, _ = truncnorm_moments(mu + delta, sigma, Interval(lo + delta, hi + delta))
            assert m1b == pytest.approx(m1a + delta, abs=1e-10)

    def test_far_tail_one_sided(self):
        # Mills-ratio regime: finite endpoint far beyond 4 standardized units
        m1, m2 = truncnorm_moments(0.0, 1.0, Interval(12.0, np.inf))
        # frozen from a 50-digit Mills-ratio oracle
        assert m1 == pytest.approx(12.08221417525428433, rel=1e-12)
        assert m2 == pytest.approx(145.98657010305141196, rel=1e-12)

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            truncnorm_moments(0.0, 0.0, Interval(0.0, 1.0))


class TestChisqQuantile:
    def test_oracle_values(self):
        # frozen from bisection on the regularized incomplete gamma
        assert chisq_quantile(0.90, 1) == pytest.approx(2.7055434540954115, abs=1e-10)
        assert chisq_quantile(0.95, 2) == pytest.approx(-2.0 * np.log(0.05), abs=1e-10)

    def test_small_p_limit(self):
        for df in (1, 3, 10):
            seq = [chisq_quantile(p, df) for p in (1e-3, 1e-8, 1e-15, 1e-30)]
            assert all(x > y for x, y in zip(seq, seq[1:]))
            assert seq[-1] < 1e-4

    def test_domain(self):
        with pytest.raises(ValueError):
            chisq_quantile(0.0, 1)
        with pytest.raises(ValueError):
            chisq_quantile(0.5, 0)

    def test_sf_consistency(self):
        for p, df in [(0.9, 1), (0.95, 2), (0.5, 7)]:
            x = chisq_quantile(p, df)
            assert chisq_sf(x, df) == pytest.approx(1.0 - p, abs=1e-10)


class TestIntervalStats:
    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            interval_stats(np.array([0.0, 2.0]), np.array([1.0, 1.5]))

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(21)
        alpha = rng.uniform(-6, 5, size=50)
        beta = alpha + rng.uniform(0.1, 3, size=50)
        log_mass, r1, r2 = interval_stats(alpha, beta)
        for i in range(50):
            lm, a1, a2 = interval_stats(alpha[i], beta[i])
            assert float(lm) == pytest.approx(log_mass[i], abs=1e-14)
            assert float(a1) == pytest.approx(r1[i], abs=1e-14)
            assert float(a2) == pytest.approx(r2[i], abs=1e-14)
