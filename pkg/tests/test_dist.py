import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from auction_lab.dist import (
    Exponential,
    Lognormal,
    Uniform,
    make_distribution,
    norm_cdf,
)
from auction_lab.errors import DomainError, ParseError
from auction_lab.rng import RandomStream

from .conftest import ALL_KINDS


class TestMakeDistribution:
    def test_uniform(self):
        assert make_distribution("uniform:a=0,b=1") == Uniform(0.0, 1.0)

    def test_lognormal_and_exponential(self):
        assert make_distribution("lognormal:p0=1,sigma=1,T=1") == Lognormal(1.0, 1.0, 1.0)
        assert make_distribution("exponential:rate=2.5") == Exponential(2.5)

    def test_lognormal_mean_by_monte_carlo(self):
        d = make_distribution("lognormal:p0=1,sigma=1,T=1")
        x = d.sample(RandomStream(11, 0), 1_000_000)
        se = x.std(ddof=1) / 1000
        assert abs(x.mean() - 1.0) <= 3 * se

    @pytest.mark.parametrize("text", ["uniform:a=1,b=0", "lognormal:p0=1,sigma=0,T=1", "exponential:rate=-1",
                                      "uniform:a=-1,b=1", "lognormal:p0=1,sigma=1,T=0"])
    def test_domain_errors(self, text):
        with pytest.raises(DomainError):
            make_distribution(text)

    @pytest.mark.parametrize("text", ["uniform", "normal:mu=0", "uniform:a=0", "uniform:a=0,b=1,c=2",
                                      "uniform:a=0, b=1", "uniform:a=x,b=1", "uniform:a=0,a=1,b=2", "uniform:a0,b=1"])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            make_distribution(text)

    @pytest.mark.parametrize("d", ALL_KINDS, ids=lambda d: d.kind)
    def test_spec_roundtrip(self, d):
        assert make_distribution(d.spec()) == d


class TestTruncatedMean:
    def test_uniform_half(self, unif):
        assert unif.truncated_mean(0.5) == pytest.approx(0.25, abs=1e-15)

    def test_lognormal_at_one_matches_quadrature(self, logn):
        # mpmath quadrature of the density; equals Phi(-1/2)/Phi(1/2)
        assert logn.truncated_mean(1.0) == pytest.approx(0.446210106847318, abs=1e-13)

    def test_large_x_tends_to_mean(self, any_dist):
        x = float(any_dist.quantile(1 - 1e-15)) * 10
        assert any_dist.truncated_mean(x) == pytest.approx(any_dist.mean(), rel=1e-9)

    def test_null_event_raises(self, unif, logn):
        with pytest.raises(DomainError):
            unif.truncated_mean(0.0)
        with pytest.raises(DomainError):
            logn.truncated_mean(0.0)

    def test_below_x_and_mean(self, any_dist):
        xs = any_dist.quantile(np.linspace(0.01, 0.99, 99))
        tm = any_dist.truncated_mean(xs)
        assert np.all(tm < xs) and np.all(tm < any_dist.mean())

    def test_strictly_increasing(self, any_dist):
        tm = any_dist.truncated_mean(any_dist.quantile(np.linspace(0.001, 0.999, 500)))
        assert np.all(np.diff(tm) > 0)


class TestPartialExpectation:
    def test_uniform(self, unif):
        assert unif.partial_expectation(0.5) == pytest.approx(0.125, abs=1e-15)

    def test_zero(self, any_dist):
        assert any_dist.partial_expectation(0.0) == 0.0

    def test_exponential_at_one(self, expo):
        assert expo.partial_expectation(1.0) == pytest.approx(1 - 2 / math.e, abs=1e-15)

    def test_infinity_gives_mean(self, any_dist):
        assert any_dist.partial_expectation(math.inf) == pytest.approx(any_dist.mean(), abs=1e-15)

    def test_product_identity(self, any_dist):
        xs = any_dist.quantile(np.linspace(0.001, 0.999, 200))
        lhs = any_dist.partial_expectation(xs)
        rhs = any_dist.cdf(xs) * any_dist.truncated_mean(xs)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_nondecreasing(self, any_dist):
        xs = np.linspace(0, float(any_dist.quantile(0.999)), 400)
        assert np.all(np.diff(any_dist.partial_expectation(xs)) >= 0)


class TestCdfQuantile:
    def test_roundtrip(self, any_dist):
        xs = any_dist.quantile(np.linspace(0.005, 0.995, 100))
        back = any_dist.quantile(any_dist.cdf(xs))
        assert np.max(np.abs(back - xs) / xs) <= 1e-10

    def test_cdf_limits(self, any_dist):
        assert any_dist.cdf(0.0) == 0.0
        assert any_dist.cdf(1e6) == pytest.approx(1.0, abs=1e-15)

    def test_lognormal_closed_forms_vs_density_quadrature(self):
        d = Lognormal(1.3, 0.7, 2.0)
        s = 0.7 * math.sqrt(2.0)
        mp.mp.dps = 25

        def dens(t):
            return mp.npdf((mp.log(t / 1.3) + s * s / 2) / s) / (s * t)

        for x in (0.3, 1.0, 2.5, 6.0):
            F = mp.quad(dens, [0, x / 10, x])
            PE = mp.quad(lambda t: t * dens(t), [0, x / 10, x])
            assert d.cdf(x) == pytest.approx(float(F), abs=1e-9)
            assert d.partial_expectation(x) == pytest.approx(float(PE), abs=1e-9)
            assert d.cdf(x) == pytest.approx(norm_cdf(math.log(x / 1.3) / s + s / 2), abs=1e-15)

    def test_lognormal_mean_is_p0(self):
        for T in (0.25, 1.0, 4.0):
            d = Lognormal(2.0, 0.8, T)
            assert d.mean() == 2.0
            assert float(mp.quad(lambda t: t * d.pdf(float(t)), [0, 1, 2, 10, mp.inf])) == pytest.approx(2.0, rel=1e-9)

    def test_pdf_integrates_to_cdf(self, any_dist):
        x = float(any_dist.quantile(0.7))
        lo = any_dist.support_inf
        val = mp.quad(lambda t: any_dist.pdf(float(t)), [lo, x])
        assert float(val) == pytest.approx(0.7, abs=1e-9)


class TestSample:
    def test_lognormal_mean(self, logn):
        x = logn.sample(RandomStream(3, 0), 1_000_000)
        assert abs(x.mean() - 1.0) <= 3 * x.std(ddof=1) / 1000

    def test_uniform_ks(self, unif):
        x = unif.sample(RandomStream(3, 1), 1_000_000)
        assert stats.kstest(x, "uniform").statistic <= 0.002

    def test_determinism(self, any_dist):
        a = any_dist.sample(RandomStream(42, 7), 100)
        b = any_dist.sample(RandomStream(42, 7), 100)
        assert np.array_equal(a, b)

    def test_scalar_draw(self, unif):
        assert isinstance(unif.sample(RandomStream(1)), float)

    def test_exponential_ks(self, expo):
        x = expo.sample(RandomStream(8, 0), 200_000)
        assert stats.kstest(x, "expon").statistic <= 0.005


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0, 5), width=st.floats(0.01, 10), p=st.floats(0.01, 0.99))
def test_uniform_properties(a, width, p):
    d = Uniform(a, a + width)
    x = float(d.quantile(p))
    assert d.cdf(x) == pytest.approx(p, abs=1e-12)
    assert d.partial_expectation(x) == pytest.approx(d.cdf(x) * d.truncated_mean(x), abs=1e-12)
    assert d.truncated_mean(x) < min(x, d.mean()) + 1e-12


@settings(max_examples=60, deadline=None)
@given(p0=st.floats(0.1, 10), sigma=st.floats(0.1, 2), T=st.floats(0.05, 4), p=st.floats(0.01, 0.99))
def test_lognormal_properties(p0, sigma, T, p):
    d = Lognormal(p0, sigma, T)
    x = float(d.quantile(p))
    assert abs(d.quantile(d.cdf(x)) - x) <= 1e-10 * x
    assert d.partial_expectation(x) == pytest.approx(d.cdf(x) * d.truncated_mean(x), abs=1e-12)
    assert d.truncated_mean(x) < min(x, d.mean())


@settings(max_examples=60, deadline=None)
@given(rate=st.floats(0.05, 20), p=st.floats(0.01, 0.99))
def test_exponential_properties(rate, p):
    d = Exponential(rate)
    x = float(d.quantile(p))
    assert abs(d.quantile(d.cdf(x)) - x) <= 1e-10 * x
    assert d.partial_expectation(x) == pytest.approx(d.cdf(x) * d.truncated_mean(x), abs=1e-12)
    assert d.truncated_mean(x) < min(x, d.mean())
