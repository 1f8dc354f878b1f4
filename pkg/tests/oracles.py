"""Independent oracles used to freeze expected values.

Everything here is deliberately written with a different method from the
implementation under test: plain loops, quadrature, grid searches, or
closed forms, never the library's own fast path.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats
from scipy.special import ndtr


def naive_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Triple-loop matrix multiply."""
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m), dtype=np.result_type(a, b))
    for i in range(n):
        for j in range(m):
            acc = 0.0 + 0.0j
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def lu_det(matrix: np.ndarray) -> complex:
    """Determinant via LU with partial pivoting (plain Python loops)."""
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    det = 1.0 + 0.0j
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r, col]))
        if abs(a[pivot, col]) == 0.0:
            return 0.0 + 0.0j
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            det = -det
        det *= a[col, col]
        for r in range(col + 1, n):
            factor = a[r, col] / a[col, col]
            a[r, col:] -= factor * a[col, col:]
    return det


def waterfill_grid_search(lams, budget: float, gain: float, step: float = 1e-3) -> float:
    """Brute-force simplex search of the 3-eigenvalue waterfilling optimum."""
    l1, l2, l3 = lams
    best = 0.0
    g1 = np.arange(0.0, budget + step, step)
    for a in g1:
        b = np.arange(0.0, budget - a + step, step)
        c = budget - a - b
        ok = c >= -1e-12
        vals = (
            np.log1p(gain * l1 * a)
            + np.log1p(gain * l2 * b[ok])
            + np.log1p(gain * l3 * np.maximum(c[ok], 0.0))
        )
        best = max(best, float(vals.max()) / math.log(2.0))
    return best


def lindley_maxplus(increments) -> np.ndarray:
    """Backlog via the max-plus form B_t = max_{0<=k<=t}(S_t - S_k) with S_0=0."""
    x = np.asarray(increments, dtype=float)
    prefix = np.concatenate([[0.0], np.cumsum(x)])
    out = np.empty(x.size)
    for t in range(1, x.size + 1):
        out[t - 1] = prefix[t] - min(prefix[: t + 1])
    return out


# -- stop-loss closed forms ---------------------------------------------------


def stop_loss_constant(c: float, t: float) -> float:
    return max(c - t, 0.0)


def stop_loss_uniform(t: float) -> float:
    """E[(U - t)+] for U ~ Uniform(0,1)."""
    if t <= 0:
        return 0.5 - t
    if t >= 1:
        return 0.0
    return 0.5 * (1.0 - t) ** 2


def stop_loss_triangular_sum(t: float) -> float:
    """E[(U1 + U2 - t)+] for independent Uniform(0,1) summands."""
    if t <= 0:
        return 1.0 - t
    if t <= 1:
        return 1.0 - t + t**3 / 6.0
    if t <= 2:
        return (2.0 - t) ** 3 / 6.0
    return 0.0


def stop_loss_scaled_uniform(t: float) -> float:
    """E[(2U - t)+], the comonotone uniform pair sum."""
    if t <= 0:
        return 1.0 - t
    if t >= 2:
        return 0.0
    return (2.0 - t) ** 2 / 4.0


def stop_loss_truncnorm_quad(scale: float, t: float, bound: float = 3.0) -> float:
    """E[(X - t)+] for a centered normal truncated to [-bound, bound], scaled."""
    dist = stats.truncnorm(-bound, bound)

    def integrand(x):
        return max(scale * x - t, 0.0) * dist.pdf(x)

    val, _ = integrate.quad(integrand, -bound, bound, limit=200)
    return val


# -- dependence oracles --------------------------------------------------------


def gauss_spearman(rho: float) -> float:
    """Spearman's rho of a bivariate Gaussian copula."""
    return 6.0 / math.pi * math.asin(rho / 2.0)


def bvn_upper_orthant(rho: float, z1: float, z2: float) -> float:
    """P(Z1 > z1, Z2 > z2) for standard bivariate normal."""
    cov = [[1.0, rho], [rho, 1.0]]
    mvn = stats.multivariate_normal(mean=[0.0, 0.0], cov=cov)
    # inclusion-exclusion from the CDF
    return 1.0 - ndtr(z1) - ndtr(z2) + mvn.cdf([z1, z2])


def ar1_exp_lag1_pearson(rho: float, n_nodes: int = 120) -> float:
    """Pearson lag-1 correlation of Exp(1) marginals under a Gaussian copula
    with correlation rho, by Gauss-Hermite quadrature."""
    from numpy.polynomial.hermite_e import hermegauss

    nodes, weights = hermegauss(n_nodes)
    w = weights / weights.sum()
    z1 = nodes[:, None]
    z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * nodes[None, :]

    def quantile(z):
        u = np.clip(ndtr(z), 1e-16, 1.0 - 1e-16)
        return -np.log1p(-u)

    exy = float(np.sum(w[:, None] * w[None, :] * quantile(z1) * quantile(z2)))
    return exy - 1.0  # mean 1, variance 1


def hill_mle(sorted_samples: np.ndarray, k: int) -> float:
    """Pareto MLE of the tail index on the top-k window, plain loop."""
    n = sorted_samples.size
    pivot = sorted_samples[n - k - 1]
    total = 0.0
    for i in range(n - k, n):
        total += math.log(sorted_samples[i] / pivot)
    return k / total


def compound_poisson_variance(rate: float, inc_mean: float, inc_var: float) -> float:
    return rate * (inc_var + inc_mean**2)


def logpareto_sf_by_quadrature(y: float, alpha: float, xm: float) -> float:
    """P(exp(P) > e^y) for P ~ Pareto(alpha, xm), integrating the density of
    X = exp(P): f(x) = alpha xm^alpha (ln x)^(-alpha-1) / x on [e^xm, inf)."""

    def density(x):
        return alpha * xm**alpha * math.log(x) ** (-alpha - 1.0) / x

    # substitute u = ln x (slowly varying: the range is infinite and e^u
    # overflows float64, so the Jacobian e^u is cancelled symbolically:
    # density(e^u) * e^u = alpha * xm^alpha * u^(-alpha-1))
    def integrand(u):
        if u < 700.0:
            return density(math.exp(u)) * math.exp(u)
        return alpha * xm**alpha * u ** (-alpha - 1.0)

    val, _ = integrate.quad(integrand, y, np.inf, limit=400)
    return val


def long_run_queue(mean_load: float, horizon: int, seed: int):
    """Single long M/D/1-style path via plain Python recursion; returns the
    backlog array for exceedance/Little checks."""
    rng = np.random.default_rng(seed)
    arrivals = rng.exponential(mean_load, size=horizon)
    backlog = np.empty(horizon)
    b = 0.0
    for t in range(horizon):
        b = max(b + arrivals[t] - 1.0, 0.0)
        backlog[t] = b
    return arrivals, backlog
