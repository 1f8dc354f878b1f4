import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from depctl.distributions import (
    DistributionSpec,
    ParameterError,
    TailClass,
    ground_truth_tail,
)
from depctl.streams import RandomStream

import oracles

ZOO = [
    DistributionSpec.rayleigh(1.0),
    DistributionSpec.rice(3.0, 1.0),
    DistributionSpec.nakagami(2.0, 1.0),
    DistributionSpec.lognormal(0.0, 1.0),
    DistributionSpec.weibull(0.8, 1.0),
    DistributionSpec.weibull(1.5, 2.0),
    DistributionSpec.pareto1(2.0, 1.0),
    DistributionSpec.exponential(1.0),
    DistributionSpec.logpareto(1.0, 1.0),
    DistributionSpec.constant(3.5),
    DistributionSpec.uniform(-1.0, 2.0),
]


def stream(label):
    return RandomStream(0xD157, label)


# -- parameter validation -----------------------------------------------------


@pytest.mark.parametrize(
    "bad",
    [
        lambda: DistributionSpec.rayleigh(0.0),
        lambda: DistributionSpec.pareto1(-1.0),
        lambda: DistributionSpec.pareto1(1.0, 0.0),
        lambda: DistributionSpec.uniform(2.0, 2.0),
        lambda: DistributionSpec.weibull(0.0),
        lambda: DistributionSpec.lognormal(0.0, -1.0),
    ],
)
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ParameterError):
        bad()


# -- sampling ------------------------------------------------------------------


def test_constant_sampler_degenerate():
    draws = DistributionSpec.constant(3.5).sample(stream("const"), 4)
    assert np.array_equal(draws, [3.5, 3.5, 3.5, 3.5])


def test_pareto_tail_probability_analytic():
    spec = DistributionSpec.pareto1(1.0, 1.0)
    draws = spec.sample(stream("pareto-tail"), 10**6)
    assert np.mean(draws > 10.0) == pytest.approx(0.1, abs=1e-3)


def test_lognormal_self_reciprocity_ks():
    spec = DistributionSpec.lognormal(0.0, 1.0)
    y = spec.sample(stream("ln-a"), 10**5)
    inv = 1.0 / spec.sample(stream("ln-b"), 10**5)
    assert stats.ks_2samp(y, inv).pvalue > 0.01


def test_sampling_deterministic_bit_identical():
    for spec in ZOO:
        a = spec.sample(RandomStream(9, "d"), 512)
        b = spec.sample(RandomStream(9, "d"), 512)
        assert np.array_equal(a, b), spec.family


def test_sample_log_matches_log_of_sample():
    for spec in ZOO:
        if spec.family in ("constant", "uniform"):
            continue
        a = np.log(spec.sample(RandomStream(3, "sl"), 1000))
        b = spec.sample_log(RandomStream(3, "sl"), 1000)
        finite = np.isfinite(a)
        assert np.allclose(a[finite], b[finite], rtol=1e-12), spec.family


def test_mean_within_four_standard_errors():
    n = 10**6
    for spec in ZOO:
        mu = spec.mean()
        if not math.isfinite(mu):
            continue
        draws = spec.sample(stream(f"mean/{spec}"), n)
        se = float(np.std(draws, ddof=1)) / math.sqrt(n)
        assert abs(float(np.mean(draws)) - mu) <= 4.0 * max(se, 1e-12), spec.family


# -- quantiles and CDFs ----------------------------------------------------------


def test_quantile_trivial_examples():
    assert DistributionSpec.uniform(0, 1).quantile(0.25) == pytest.approx(0.25)
    assert DistributionSpec.exponential(1.0).quantile(1.0 - math.exp(-1.0)) == pytest.approx(
        1.0, abs=1e-12
    )
    assert DistributionSpec.pareto1(2.0, 1.0).quantile(0.75) == pytest.approx(2.0)


def test_quantile_domain_error():
    with pytest.raises(ParameterError):
        DistributionSpec.exponential(1.0).quantile(0.0)
    with pytest.raises(ParameterError):
        DistributionSpec.exponential(1.0).quantile(1.0)


@pytest.mark.parametrize("spec", [s for s in ZOO if s.family != "constant"],
                         ids=lambda s: str(s))
def test_quantile_cdf_roundtrip(spec):
    u = np.linspace(0.01, 0.99, 25)
    x = spec.quantile(u)
    assert np.all(np.diff(x) >= -1e-12)
    back = spec.quantile(np.clip(spec.cdf(x), 1e-15, 1 - 1e-15))
    assert np.allclose(back, x, rtol=1e-9, atol=1e-12)


@given(
    u=st.floats(min_value=0.001, max_value=0.999),
    rate=st.floats(min_value=0.1, max_value=10.0),
)
@settings(max_examples=100, deadline=None)
def test_exponential_roundtrip_property(u, rate):
    spec = DistributionSpec.exponential(rate)
    assert float(spec.cdf(spec.quantile(u))) == pytest.approx(u, rel=1e-9)


def test_sf_complements_cdf():
    for spec in ZOO:
        x = spec.quantile(np.linspace(0.05, 0.95, 11)) if spec.family != "constant" else [3.5]
        assert np.allclose(spec.sf(x) + spec.cdf(x), 1.0, atol=1e-12)


# -- tail classes -----------------------------------------------------------------


def test_ground_truth_labels():
    assert ground_truth_tail(DistributionSpec.rayleigh(1.0)).tail_class is TailClass.LIGHT_TAILED
    assert (
        ground_truth_tail(DistributionSpec.lognormal(0, 1)).tail_class
        is TailClass.HEAVY_SUBEXPONENTIAL_ALL_MOMENTS
    )
    assert (
        ground_truth_tail(DistributionSpec.weibull(0.8)).tail_class
        is TailClass.HEAVY_SUBEXPONENTIAL_ALL_MOMENTS
    )
    assert ground_truth_tail(DistributionSpec.weibull(1.0)).tail_class is TailClass.LIGHT_TAILED
    rv = ground_truth_tail(DistributionSpec.pareto1(2.5))
    assert rv.tail_class is TailClass.REGULARLY_VARYING and rv.index == 2.5
    assert (
        ground_truth_tail(DistributionSpec.logpareto(1.0)).tail_class
        is TailClass.SLOWLY_VARYING
    )


def test_logpareto_sf_matches_quadrature_oracle():
    spec = DistributionSpec.logpareto(1.0, 1.0)
    for y in (2.0, 4.0, 8.0):
        by_oracle = oracles.logpareto_sf_by_quadrature(y, 1.0, 1.0)
        assert float(spec.sf(math.exp(y))) == pytest.approx(by_oracle, rel=1e-6)
        assert float(spec.sf(math.exp(y))) == pytest.approx(y ** -1.0, rel=1e-12)


def test_serialization_round_trip():
    for spec in ZOO:
        again = DistributionSpec.from_config(spec.to_config())
        assert again == spec
    cfg = {"family": "pareto1", "alpha": 2.0, "xm": 1.0}
    assert DistributionSpec.from_config(cfg).to_config() == cfg


def test_unknown_family_rejected():
    with pytest.raises(ParameterError):
        DistributionSpec.from_config({"family": "cauchy", "x0": 0.0})
