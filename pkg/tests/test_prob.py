"""Tests for seeded streams, distribution specs and the normal CDF."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from avgcase.errors import DomainError, ParameterError
from avgcase.prob import (Bernoulli, Binomial, FinitePmf, Gaussian,
                          Hypergeometric, Mixture, RngStream, Tern,
                          finite_pmf, normal_cdf, normal_quantile, sample,
                          tern_pmf, validate_spec)
from avgcase.verify import chi2_gof_counts

# Standard normal CDF values computed with mpmath.ncdf at 40 digits.
PHI_ORACLE = {
    0.5: 0.6914624612740131,
    1.0: 0.8413447460685429,
    1.7: 0.9554345372414570,
    2.0: 0.9772498680518208,
    3.0: 0.9986501019683699,
    -1.0: 0.1586552539314571,
    -2.5: 0.006209665325776135,
    4.0: 0.9999683287581669,
    -4.0: 3.167124183311992e-05,
    0.1: 0.5398278372770290,
}


def test_stream_determinism_and_independence():
    a = RngStream(7).child("x", 3).generator().standard_normal(16)
    b = RngStream(7).child("x", 3).generator().standard_normal(16)
    c = RngStream(7).child("x", 4).generator().standard_normal(16)
    d = RngStream(8).child("x", 3).generator().standard_normal(16)
    assert_array_equal(a, b)  # identical (seed, path) => bit-identical
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_stream_integer_draws_bit_identical():
    g1 = RngStream(123).child("ints").generator()
    g2 = RngStream(123).child("ints").generator()
    assert_array_equal(g1.integers(0, 2**62, size=64), g2.integers(0, 2**62, size=64))


def test_sample_repeatable_and_advancing():
    rng = RngStream(5)
    x = sample(Gaussian(0, 1), rng.child("a"))
    assert x == sample(Gaussian(0, 1), rng.child("a"))
    seq = [sample(Gaussian(0, 1), rng.child("a", i)) for i in range(4)]
    assert len(set(seq)) == 4


def test_bernoulli_degenerate():
    rng = RngStream(1)
    assert np.all(sample(Bernoulli(0.0), rng, size=500) == 0)
    assert np.all(sample(Bernoulli(1.0), rng, size=500) == 1)


def test_gaussian_moments():
    # LLN check: mean within 4/sqrt(n), variance within 0.01 of 1.
    x = sample(Gaussian(0, 1), RngStream(11).child("lln"), size=10**6)
    assert abs(x.mean()) < 4 / np.sqrt(10**6)
    assert abs(x.var() - 1.0) < 0.01


def test_tern_pmf_examples():
    assert_allclose(tern_pmf(0.5, 0.0, 0.0), (0.25, 0.5, 0.25))
    assert_allclose(tern_pmf(0.5, 0.1, 0.0), (0.15, 0.5, 0.35))
    with pytest.raises(ParameterError, match="-1"):
        tern_pmf(0.2, 0.5, 0.0)  # outcome -1 mass would be -0.1


def test_spec_validation_errors():
    for bad in (
        Bernoulli(1.5),
        Binomial(-1, 0.5),
        Gaussian(0.0, 0.0),
        Hypergeometric(10, 12, 5),
        FinitePmf((1.0, 2.0), (0.7, 0.7)),
        Mixture(2.0, Bernoulli(0.5), Bernoulli(0.5)),
    ):
        with pytest.raises(ParameterError):
            validate_spec(bad)


@pytest.mark.parametrize("spec", [
    Bernoulli(0.3),
    Binomial(12, 0.4),
    Hypergeometric(50, 20, 12),
    Tern(0.6, 0.05, 0.01),
    FinitePmf((0.0, 1.0, 5.0), (0.2, 0.5, 0.3)),
    Mixture(0.25, Bernoulli(0.2), Binomial(3, 0.9)),
])
def test_finite_specs_chi2_gof(spec):
    # 1e5 samples pass a chi-square test against the exact pmf at 1e-4.
    x = sample(spec, RngStream(2026).child(repr(spec)), size=100_000)
    stat, pval = chi2_gof_counts(np.asarray(x, dtype=float), finite_pmf(spec))
    assert pval > 1e-4, (spec, stat, pval)


def test_mixture_choice_marginal():
    # Distinguishable components: the count of right-component draws follows
    # Binomial(n, eps).
    spec = Mixture(0.3, Gaussian(0.0, 1.0), Gaussian(100.0, 1.0))
    x = sample(spec, RngStream(31).child("mix"), size=100_000)
    n_right = int((x > 50).sum())
    from scipy.stats import binomtest

    assert binomtest(n_right, 100_000, 0.3).pvalue > 1e-4


def test_finite_pmf_of_mixture_merges_support():
    pm = finite_pmf(Mixture(0.5, Bernoulli(1.0), Bernoulli(0.0)))
    values, probs = pm.as_arrays()
    assert_allclose(values, [0.0, 1.0])
    assert_allclose(probs, [0.5, 0.5])


def test_normal_cdf_against_oracle():
    for x, expected in PHI_ORACLE.items():
        assert abs(normal_cdf(x) - expected) < 1e-12
    assert normal_cdf(0.0) == 0.5


def test_normal_quantile_roundtrip():
    assert abs(normal_quantile(normal_cdf(1.7)) - 1.7) < 1e-10
    grid = np.linspace(1e-6, 1 - 1e-6, 101)
    assert_allclose(normal_cdf(normal_quantile(grid)), grid, atol=1e-12)
    for bad in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(DomainError):
            normal_quantile(bad)


def test_hypergeometric_matches_scipy_pmf():
    from scipy.stats import hypergeom

    pm = finite_pmf(Hypergeometric(30, 12, 9))
    values, probs = pm.as_arrays()
    assert_allclose(probs, hypergeom.pmf(values, 30, 12, 9), atol=1e-14)
    assert abs(probs.sum() - 1.0) < 1e-12
