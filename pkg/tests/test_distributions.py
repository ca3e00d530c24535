import math

import numpy as np
import pytest
from scipy import integrate

from recalib import (
    Normal,
    NonStandardizedT,
    NormalMixture,
    ParameterError,
    shifted,
)


def random_dist(rng):
    kind = rng.integers(0, 3)
    mu = float(rng.normal(0, 3))
    s2 = float(rng.uniform(0.2, 4.0))
    if kind == 0:
        return Normal(mu, s2)
    if kind == 1:
        return NonStandardizedT(float(rng.uniform(2.5, 40)), mu, s2)
    k = int(rng.integers(1, 5))
    w = rng.uniform(0.1, 1.0, k)
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    comps = tuple(
        (float(w[i]), float(rng.normal(0, 3)), float(rng.uniform(0.2, 4.0)))
        for i in range(k)
    )
    return NormalMixture(comps)


class TestPdf:
    def test_cauchy_special_case(self):
        # nu=1 t is the Cauchy distribution: pdf(0) = 1/pi
        assert NonStandardizedT(1, 0, 1).pdf(0.0) == pytest.approx(1 / math.pi, abs=1e-12)

    def test_standard_normal_at_zero(self):
        assert Normal(0, 1).pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)

    def test_single_component_mixture_reduces_to_normal(self):
        mix = NormalMixture(((1.0, 3.0, 4.0),))
        assert mix.pdf(3.0) == pytest.approx(Normal(3.0, 4.0).pdf(3.0), abs=1e-15)


class TestCdf:
    def test_normal_symmetry(self):
        assert Normal(0, 1).cdf(0.0) == pytest.approx(0.5, abs=1e-12)

    def test_t_symmetry_about_location(self):
        assert NonStandardizedT(18, 0, 1.1).cdf(0.0) == pytest.approx(0.5, abs=1e-12)

    def test_symmetric_mixture(self):
        mix = NormalMixture(((0.5, -1.0, 1.0), (0.5, 1.0, 1.0)))
        assert mix.cdf(0.0) == pytest.approx(0.5, abs=1e-12)

    def test_monotone_with_limits(self):
        d = NonStandardizedT(4, 1.0, 2.0)
        xs = np.linspace(-50, 50, 401)
        cs = [d.cdf(x) for x in xs]
        assert all(b >= a for a, b in zip(cs, cs[1:]))
        assert d.cdf(-1e8) < 1e-12 and d.cdf(1e8) > 1 - 1e-12


class TestQuantile:
    def test_normal_median(self):
        assert Normal(0, 1).quantile(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_normal_tabled_value(self):
        # 97.5th percentile of the standard Normal is 1.959964
        assert Normal(2, 9).quantile(0.975) == pytest.approx(2 + 3 * 1.959964, abs=1e-4)

    def test_single_component_mixture_matches_normal(self):
        mix = NormalMixture(((1.0, 0.0, 1.0),))
        assert mix.quantile(0.9) == pytest.approx(Normal(0, 1).quantile(0.9), abs=1e-9)

    def test_mixture_roundtrip(self):
        mix = NormalMixture(((0.3, -2.0, 0.5), (0.5, 0.5, 2.0), (0.2, 4.0, 1.0)))
        for p in (0.01, 0.05, 0.5, 0.95, 0.99):
            assert mix.cdf(mix.quantile(p)) == pytest.approx(p, abs=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.4])
    def test_domain_error(self, p):
        with pytest.raises(ParameterError):
            Normal(0, 1).quantile(p)


class TestSample:
    def test_empty(self):
        out = Normal(0, 1).sample(np.random.default_rng(0), 0)
        assert len(out) == 0

    def test_degenerate_variance_limit(self):
        vals = Normal(5, 1e-12).sample(np.random.default_rng(1), 3)
        assert np.all(np.abs(vals - 5) < 1e-5)

    def test_law_of_large_numbers(self):
        vals = Normal(0, 1).sample(np.random.default_rng(2), 10**6)
        assert abs(vals.mean()) < 3 / math.sqrt(10**6)

    def test_deterministic_given_seed(self):
        d = NormalMixture(((0.4, 0.0, 1.0), (0.6, 2.0, 0.5)))
        a = d.sample(np.random.default_rng(7), 100)
        b = d.sample(np.random.default_rng(7), 100)
        np.testing.assert_array_equal(a, b)

    def test_mixture_moments(self):
        d = NormalMixture(((0.4, -1.0, 1.0), (0.6, 2.0, 0.5)))
        vals = d.sample(np.random.default_rng(3), 10**6)
        assert vals.mean() == pytest.approx(d.mean(), abs=0.01)
        assert vals.var() == pytest.approx(d.variance(), rel=0.01)


class TestInvariants:
    def test_normalization_random_grid(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            d = random_dist(rng)
            lo, hi = d.quantile(1e-10), d.quantile(1 - 1e-10)
            total, _ = integrate.quad(d.pdf, lo, hi, limit=200)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_cdf_derivative_matches_pdf(self):
        rng = np.random.default_rng(12)
        h = 1e-5
        for _ in range(20):
            d = random_dist(rng)
            x = float(rng.normal(0, 2))
            deriv = (d.cdf(x + h) - d.cdf(x - h)) / (2 * h)
            assert deriv == pytest.approx(d.pdf(x), abs=1e-5)

    def test_t_converges_to_normal(self):
        t = NonStandardizedT(1e6, 0.5, 2.0)
        n = Normal(0.5, 2.0)
        for x in np.linspace(-5, 5, 21):
            assert abs(t.pdf(x) - n.pdf(x)) < 1e-6

    def test_t_tails_heavier_than_normal(self):
        t = NonStandardizedT(18, 0, 1.1)
        n = Normal(0, 1)
        for x in (3.0, 3.5, 4.0, 5.0, -3.0, -4.0):
            assert t.pdf(x) > n.pdf(x)


class TestValidation:
    def test_zero_variance_normal_rejected(self):
        with pytest.raises(ParameterError):
            Normal(5, 0.0)

    def test_negative_variance_rejected(self):
        with pytest.raises(ParameterError):
            Normal(0, -1.0)

    def test_bad_nu_rejected(self):
        with pytest.raises(ParameterError):
            NonStandardizedT(0.0, 0, 1)

    def test_empty_mixture_rejected(self):
        with pytest.raises(ParameterError):
            NormalMixture(())

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            NormalMixture(((0.5, 0.0, 1.0), (0.6, 1.0, 1.0)))

    def test_negative_weight_rejected(self):
        with pytest.raises(ParameterError):
            NormalMixture(((-0.1, 0.0, 1.0), (1.1, 1.0, 1.0)))


class TestShifted:
    @pytest.mark.parametrize(
        "d",
        [
            Normal(1.0, 2.0),
            NonStandardizedT(7, -1.0, 0.5),
            NormalMixture(((0.5, 0.0, 1.0), (0.5, 2.0, 2.0))),
        ],
    )
    def test_shift_translates_quantiles(self, d):
        s = shifted(d, 3.5)
        for p in (0.1, 0.5, 0.9):
            assert s.quantile(p) == pytest.approx(d.quantile(p) + 3.5, abs=1e-8)
