import math

import numpy as np
import pytest

from depctl.channel import (
    CapacityParams,
    CapacitySample,
    ChannelModel,
    ContractError,
    DomainError,
    PowerDomainError,
    capacity_flat,
    capacity_freq_selective,
    draw_channel_entries,
    eigen_hermitian,
    gram,
    logdet_series_check,
    rank_from_eigenvalues,
    sample_capacity,
    waterfill,
)
from depctl.distributions import DistributionSpec
from depctl.streams import RandomStream
from depctl.tail_lab import EmpiricalTail, mgf_probe

import oracles

RAYLEIGH = DistributionSpec.rayleigh(2**-0.5)


# -- gram ------------------------------------------------------------------------


def test_gram_trivial():
    assert np.array_equal(gram(np.array([[1.0]])), [[1.0]])
    assert np.allclose(gram(np.eye(2)), np.eye(2))


def test_gram_matches_naive_multiply():
    rng = np.random.default_rng(1)
    h = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    want = oracles.naive_matmul(h, h.conj().T)
    assert np.allclose(gram(h), want, atol=1e-12)


# -- eigendecomposition ------------------------------------------------------------


def test_eigen_diagonal_and_symmetric():
    r = eigen_hermitian(np.diag([3.0, 1.0]))
    assert np.allclose(r.eigenvalues, [1.0, 3.0])
    r2 = eigen_hermitian(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(r2.eigenvalues, [1.0, 3.0])
    assert r2.residual <= 1e-10


def test_eigen_det_identity_random_psd():
    rng = np.random.default_rng(2)
    h = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    a = gram(h)
    r = eigen_hermitian(a)
    det_oracle = oracles.lu_det(np.eye(6) + a)
    assert float(np.prod(1.0 + r.eigenvalues)) == pytest.approx(abs(det_oracle), rel=1e-9)
    assert np.sum(r.eigenvalues) == pytest.approx(np.trace(a).real, rel=1e-9)


def test_eigen_rejects_non_hermitian():
    with pytest.raises(ContractError):
        eigen_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


# -- capacity ---------------------------------------------------------------------


def test_capacity_1x1_analytic():
    c = capacity_flat(np.array([[1.0]]), CapacityParams(w=1.0, rho=3.0, n_t=1))
    assert c.c == pytest.approx(2.0, abs=1e-12)


def test_capacity_2x2_equal_eigen_waterfill():
    c = capacity_flat(np.eye(2), CapacityParams(w=1.0, rho=2.0, n_t=2, csit="known"))
    assert c.c == pytest.approx(2.0, abs=1e-9)


def test_waterfill_matches_grid_search():
    rng = np.random.default_rng(3)
    for trial in range(5):
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        params = CapacityParams(w=1.0, rho=4.0, n_t=3, csit="known")
        got = capacity_flat(h, params).c
        lam = eigen_hermitian(gram(h)).eigenvalues
        want = oracles.waterfill_grid_search(lam, 3.0, params.rho / 3.0, step=1e-3)
        assert got == pytest.approx(want, abs=1e-4)


def test_waterfill_budget_and_dominance():
    rng = np.random.default_rng(4)
    for trial in range(10):
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        lam = eigen_hermitian(gram(h)).eigenvalues
        cap, gamma = waterfill(lam, budget=3.0, gain=1.5)
        assert float(np.sum(gamma)) == pytest.approx(3.0, abs=1e-9)
        assert np.all(gamma >= 0)
        known = capacity_flat(h, CapacityParams(w=1.0, rho=4.5, n_t=3, csit="known")).c
        unknown = capacity_flat(h, CapacityParams(w=1.0, rho=4.5, n_t=3, csit="unknown")).c
        assert known >= unknown - 1e-9


def test_capacity_zero_channel_is_zero_not_error():
    c = capacity_flat(np.zeros((2, 2)), CapacityParams(w=1.0, rho=1.0, n_t=2))
    assert c.c == 0.0
    ck = capacity_flat(np.zeros((2, 2)), CapacityParams(w=1.0, rho=1.0, n_t=2, csit="known"))
    assert ck.c == 0.0


def test_capacity_sample_rejects_negative():
    with pytest.raises(ContractError):
        CapacitySample(c=-0.1, lambda_max=1.0, trace=1.0, power=1.0)


# -- frequency selective -------------------------------------------------------------


def test_freq_selective_single_block_bit_identical():
    rng = np.random.default_rng(5)
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    p = CapacityParams(w=2.0, rho=3.0, n_t=2, csit="known")
    assert capacity_freq_selective([h], p).c == capacity_flat(h, p).c


def test_freq_selective_identical_blocks_unknown():
    rng = np.random.default_rng(6)
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    p = CapacityParams(w=1.0, rho=3.0, n_t=2, csit="unknown")
    assert capacity_freq_selective([h, h], p).c == pytest.approx(capacity_flat(h, p).c,
                                                                 rel=1e-12)


def test_freq_selective_matches_assembled_block_diagonal():
    rng = np.random.default_rng(7)
    blocks = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
              for _ in range(3)]
    p = CapacityParams(w=1.0, rho=2.5, n_t=2, csit="unknown")
    got = capacity_freq_selective(blocks, p)
    big = np.zeros((6, 6), dtype=complex)
    for i, b in enumerate(blocks):
        big[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = b
    lam = eigen_hermitian(gram(big)).eigenvalues
    want = (p.w / 3.0) * float(np.sum(np.log1p(p.rho / p.n_t * lam))) / math.log(2.0)
    assert got.c == pytest.approx(want, rel=1e-9)
    assert got.lambda_max == pytest.approx(float(np.max(lam)), rel=1e-9)


def test_freq_selective_empty_blocks_error():
    with pytest.raises(ContractError):
        capacity_freq_selective([], CapacityParams())


# -- log-det series ---------------------------------------------------------------------


def test_logdet_series_examples():
    assert logdet_series_check([0.0], 0.7, 5) == 0.0
    assert logdet_series_check([0.5], 1.0, 30) <= 1e-9
    assert logdet_series_check([0.3, 0.6], 0.9, 60) <= 1e-8


def test_logdet_series_residual_shrinks():
    res = [logdet_series_check([0.3, 0.6], 0.9, k) for k in (5, 15, 45)]
    assert res[0] > res[1] > res[2]


def test_logdet_series_domain_error():
    with pytest.raises(DomainError):
        logdet_series_check([2.0], 0.6, 10)


# -- invariants --------------------------------------------------------------------------


def test_eigen_vs_det_capacity_identity():
    rng = np.random.default_rng(8)
    h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    a = gram(h)
    lam = eigen_hermitian(a).eigenvalues
    rho_over_nt = 1.7
    det_form = math.log2(abs(oracles.lu_det(np.eye(3) + rho_over_nt * a)))
    eig_form = float(np.sum(np.log1p(rho_over_nt * lam))) / math.log(2.0)
    assert eig_form == pytest.approx(det_form, rel=1e-9)


def test_lambda_max_trace_rank_sandwich():
    rng = np.random.default_rng(9)
    for _ in range(20):
        h = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        lam = eigen_hermitian(gram(h)).eigenvalues
        lam_max = float(lam[-1])
        trace = float(np.sum(lam))
        rank = rank_from_eigenvalues(lam)
        assert lam_max <= trace + 1e-12
        assert trace <= rank * lam_max + 1e-9
        assert rank == 2


def test_trace_exponential_counterexample():
    # X = I_2, power 2: (Tr e^X)^2 > Tr e^(2X), so the naive matrix transfer
    # of (e^x)^a = e^(ax) to traces is false
    x = np.eye(2)
    lhs = float(np.trace(np.diag(np.exp(np.diag(x))))) ** 2
    rhs = float(np.trace(np.diag(np.exp(2 * np.diag(x)))))
    assert lhs == pytest.approx((2 * math.e) ** 2, rel=1e-12)
    assert rhs == pytest.approx(2 * math.e**2, rel=1e-12)
    assert lhs == pytest.approx(29.556, abs=5e-4)
    assert rhs == pytest.approx(14.778, abs=5e-4)
    assert lhs > rhs


# -- sampling ---------------------------------------------------------------------------


def test_sample_capacity_constant_channel_constant_power():
    model = ChannelModel(1, 1, DistributionSpec.constant(1.0), normalization=False)
    draws = sample_capacity(
        model, DistributionSpec.constant(1.0), CapacityParams(w=1.0, rho=3.0, n_t=1),
        RandomStream(1, "cap"), 5,
    )
    assert np.allclose(draws.c, 2.0)
    assert np.allclose(draws.power, 1.0)
    assert draws[0].c == pytest.approx(2.0)


def test_sample_capacity_rayleigh_log_tail_slope_negative():
    model = ChannelModel(2, 2, RAYLEIGH, normalization=True)
    draws = sample_capacity(model, None, CapacityParams(w=1.0, rho=10.0, n_t=2),
                            RandomStream(2, "cap"), 100_000)
    c = np.sort(draws.c)
    n = c.size
    i0 = int(0.9 * n)
    xs = c[i0 : n - 1]
    ys = np.log((n - 1.0 - np.arange(i0, n - 1)) / n)
    slope = np.polyfit(xs, ys, 1)[0]
    assert slope < -0.5  # decays at least exponentially


def test_sample_capacity_infinite_mean_power_product_has_no_mgf():
    model = ChannelModel(1, 1, RAYLEIGH, normalization=True)
    draws = sample_capacity(
        model, DistributionSpec.pareto1(0.5), CapacityParams(w=1.0, rho=10.0, n_t=1),
        RandomStream(3, "cap"), 200_000,
    )
    product = np.exp(draws.log_power + np.log(draws.lambda_max))
    probe = mgf_probe(EmpiricalTail.from_samples(product))
    assert not probe.exists_stable()


def test_sample_capacity_nonnegative_and_deterministic():
    model = ChannelModel(2, 2, RAYLEIGH)
    params = CapacityParams(w=1.0, rho=5.0, n_t=2)
    a = sample_capacity(model, None, params, RandomStream(5, "d"), 70_000)
    b = sample_capacity(model, None, params, RandomStream(5, "d"), 70_000, threads=4)
    assert np.all(a.c >= 0.0)
    assert np.array_equal(a.c, b.c)  # fixed chunking: thread count is irrelevant


def test_normalization_gives_unit_second_moment():
    for law in (RAYLEIGH, DistributionSpec.lognormal(0.0, 1.0),
                DistributionSpec.weibull(0.8, 1.0)):
        model = ChannelModel(1, 1, law, normalization=True)
        entries = draw_channel_entries(model, RandomStream(6, "norm"), 50_000)
        second = float(np.mean(np.abs(entries) ** 2))
        assert second == pytest.approx(1.0, abs=0.05)


def test_power_resample_policy_error():
    model = ChannelModel(1, 1, RAYLEIGH)
    with pytest.raises(PowerDomainError):
        sample_capacity(model, DistributionSpec.uniform(-1.0, 1.0),
                        CapacityParams(), RandomStream(7, "p"), 1000)


def test_sample_capacity_freq_selective_records_block_max():
    model = ChannelModel(2, 2, RAYLEIGH, subchannels=3)
    draws = sample_capacity(model, None, CapacityParams(w=1.0, rho=2.0, n_t=2),
                            RandomStream(8, "fs"), 500)
    assert np.all(draws.lambda_max <= draws.trace + 1e-12)
    assert np.all(draws.c >= 0.0)
