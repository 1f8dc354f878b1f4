"""Empirical stochastic-order testers and the dependence-transform experiments.

All testers are one-sided hypothesis checks at confidence, never proofs: a
verdict "holds" means no grid point violates the claimed dominance beyond
+2 standard errors, "fails" means some point violates beyond 4, anything
between is inconclusive. The workhorse statistic is the stop-loss transform
pi(t) = E[(S - t)+] (convex-order dominance = stop-loss dominance, plus
mean equality for the plain convex order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from .channel import ContractError
from .dependence import (
    CopulaSpec,
    MarginalShift,
    ProcessSpec,
    SmPair,
    gen_process,
    norta,
    sample_copula,
)
from .distributions import DistributionSpec
from .streams import RandomStream

HOLD_Z = 2.0          # no violation beyond +2 se -> holds
FAIL_Z = 4.0          # any violation beyond 4 se -> fails
GRID_POINTS = 41
GRID_SPAN = (0.05, 0.995)
BOOTSTRAP_RESAMPLES = 200


@dataclass
class StopLossCurve:
    t_grid: np.ndarray
    pi: np.ndarray
    ci_halfwidth: np.ndarray
    se: np.ndarray
    mean: float
    mean_ci: float

    def __post_init__(self):
        lower = np.maximum(self.mean - self.t_grid, 0.0)
        if np.any(self.pi < lower - 3.0 * np.maximum(self.se, 1e-12) - 1e-9):
            raise ContractError("stop-loss curve dips below (mean - t)+ beyond noise")


@dataclass
class OrderVerdict:
    relation: str               # st | cx | icx | icv | uo_lo_witness | dcx_witness
    outcome: str                # holds | fails | inconclusive
    margin: float               # worst standardized violation (z units)
    detail: dict = field(default_factory=dict)

    def __str__(self) -> str:
        return f"{self.relation}: {self.outcome} (margin {self.margin:+.2f})"


def _outcome_from_margin(margin: float) -> str:
    if margin <= HOLD_Z:
        return "holds"
    if margin > FAIL_Z:
        return "fails"
    return "inconclusive"


def pooled_grid(a: np.ndarray, b: np.ndarray, n_points: int = GRID_POINTS) -> np.ndarray:
    pooled = np.concatenate([np.asarray(a, float).ravel(), np.asarray(b, float).ravel()])
    qs = np.linspace(GRID_SPAN[0], GRID_SPAN[1], n_points)
    return np.unique(np.quantile(pooled, qs))


def stop_loss(
    samples: np.ndarray,
    t_grid: np.ndarray,
    stream: Optional[RandomStream] = None,
    n_boot: int = BOOTSTRAP_RESAMPLES,
) -> StopLossCurve:
    """Empirical pi(t) = mean((s - t)+) with Poisson-bootstrap 95% bands."""
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ContractError("empty stop-loss grid")
    n = s.size
    if n < 2:
        raise ContractError("need at least two samples")
    suffix = np.concatenate([np.cumsum(s[::-1])[::-1], [0.0]])
    pos = np.searchsorted(s, t_grid, side="right")
    counts = n - pos
    pi = (suffix[pos] - t_grid * counts) / n

    # plug-in standard errors drive the verdicts
    excess = np.maximum(s[None, :] - t_grid[:, None], 0.0)
    se = np.std(excess, axis=1, ddof=1) / math.sqrt(n)

    rng = (stream or RandomStream(0xB007, "stop-loss")).generator
    boots = np.empty((n_boot, t_grid.size))
    block = max(1, int(2e6 // max(n, 1)))
    for start in range(0, n_boot, block):
        stop = min(start + block, n_boot)
        w = rng.poisson(1.0, size=(stop - start, n)).astype(float)
        totals = w.sum(axis=1)
        w_suffix = np.concatenate(
            [np.cumsum(w[:, ::-1], axis=1)[:, ::-1], np.zeros((stop - start, 1))], axis=1
        )
        ws_suffix = np.concatenate(
            [np.cumsum((w * s[None, :])[:, ::-1], axis=1)[:, ::-1],
             np.zeros((stop - start, 1))], axis=1
        )
        boots[start:stop] = (ws_suffix[:, pos] - t_grid[None, :] * w_suffix[:, pos]) / totals[
            :, None
        ]
    lo = np.percentile(boots, 2.5, axis=0)
    hi = np.percentile(boots, 97.5, axis=0)
    mean = float(np.mean(s))
    mean_se = float(np.std(s, ddof=1) / math.sqrt(n))
    return StopLossCurve(t_grid, pi, 0.5 * (hi - lo), se, mean, 2.0 * mean_se)


def _stop_loss_violation(a: np.ndarray, b: np.ndarray, t_grid: np.ndarray):
    """Worst z of pi_a(t) - pi_b(t) over the grid (positive = violation)."""
    a = np.asarray(a, float).ravel()
    b = np.asarray(b, float).ravel()
    pis = []
    ses = []
    for x in (a, b):
        s = np.sort(x)
        n = s.size
        suffix = np.concatenate([np.cumsum(s[::-1])[::-1], [0.0]])
        pos = np.searchsorted(s, t_grid, side="right")
        counts = n - pos
        pis.append((suffix[pos] - t_grid * counts) / n)
        excess = np.maximum(s[None, :] - t_grid[:, None], 0.0)
        ses.append(np.var(excess, axis=1, ddof=1) / n)
    se = np.sqrt(ses[0] + ses[1])
    diff = pis[0] - pis[1]
    z = diff / np.maximum(se, 1e-300)
    z = np.where((diff <= 0) | (se > 0), z, math.inf)  # violation with zero se
    worst = float(np.max(z))
    return worst, pis[0], pis[1], se


def icx_test(
    a_samples, b_samples, confidence: float = 0.95, t_grid: Optional[np.ndarray] = None
) -> OrderVerdict:
    """a <=_icx b: stop-loss dominance pi_a <= pi_b across the pooled grid."""
    grid = pooled_grid(a_samples, b_samples) if t_grid is None else np.asarray(t_grid, float)
    margin, pa, pb, se = _stop_loss_violation(a_samples, b_samples, grid)
    return OrderVerdict(
        "icx", _outcome_from_margin(margin), margin,
        {"t_grid": grid, "pi_a": pa, "pi_b": pb, "se": se},
    )


def icv_test(a_samples, b_samples, confidence: float = 0.95) -> OrderVerdict:
    """a <=_icv b, via the negated-and-swapped increasing convex test."""
    v = icx_test(-np.asarray(b_samples, float), -np.asarray(a_samples, float), confidence)
    return OrderVerdict("icv", v.outcome, v.margin, v.detail)


def cx_test(
    a_samples, b_samples, confidence: float = 0.95, t_grid: Optional[np.ndarray] = None
) -> OrderVerdict:
    """a <=_cx b: stop-loss dominance plus equal means (two-sample band)."""
    a = np.asarray(a_samples, float).ravel()
    b = np.asarray(b_samples, float).ravel()
    icx = icx_test(a, b, confidence, t_grid)
    mean_se = math.sqrt(np.var(a, ddof=1) / a.size + np.var(b, ddof=1) / b.size)
    mean_z = abs(float(np.mean(a) - np.mean(b))) / max(mean_se, 1e-300)
    margin = max(icx.margin, mean_z)
    detail = dict(icx.detail, mean_z=mean_z)
    return OrderVerdict("cx", _outcome_from_margin(margin), margin, detail)


def st_test(a_samples, b_samples, confidence: float = 0.95) -> OrderVerdict:
    """a <=_st b: ECDF dominance F_a >= F_b within a two-sample DKW band."""
    a = np.sort(np.asarray(a_samples, float).ravel())
    b = np.sort(np.asarray(b_samples, float).ravel())
    alpha = 1.0 - confidence
    band = math.sqrt(math.log(2.0 / alpha) / (2.0 * a.size)) + math.sqrt(
        math.log(2.0 / alpha) / (2.0 * b.size)
    )
    grid = np.unique(np.concatenate([a, b]))
    if grid.size > 4000:
        grid = grid[:: grid.size // 4000 + 1]
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    # margin in the artifact's z units: the band plays the role of 2 se
    worst = float(np.max(fb - fa))
    margin = HOLD_Z * worst / band
    return OrderVerdict("st", _outcome_from_margin(margin), margin,
                        {"band": band, "worst_gap": worst})


def orthant_witness_test(
    a_paths: np.ndarray,
    b_paths: np.ndarray,
    c_grid: Optional[np.ndarray] = None,
    confidence: float = 0.95,
) -> OrderVerdict:
    """Necessary orthant witnesses for a <=_sm b on identically-marginal vectors:
    P(a > c) <= P(b > c) and P(a <= c) <= P(b <= c) for every grid box c."""
    a = np.asarray(a_paths, float)
    b = np.asarray(b_paths, float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ContractError("need (n, d) sample blocks of equal dimension")
    for j in range(a.shape[1]):
        if stats.ks_2samp(a[:, j], b[:, j]).pvalue < 0.01:
            raise ContractError(f"marginals differ in coordinate {j} (KS at 1%)")
    if c_grid is None:
        qs = [0.25, 0.5, 0.75]
        per_coord = [
            np.quantile(np.concatenate([a[:, j], b[:, j]]), qs) for j in range(a.shape[1])
        ]
        mesh = np.meshgrid(*per_coord, indexing="ij")
        c_grid = np.stack([m.ravel() for m in mesh], axis=1)
    worst = -math.inf
    for c in np.atleast_2d(c_grid):
        for mode in ("upper", "lower"):
            if mode == "upper":
                pa = float(np.mean(np.all(a > c, axis=1)))
                pb = float(np.mean(np.all(b > c, axis=1)))
            else:
                pa = float(np.mean(np.all(a <= c, axis=1)))
                pb = float(np.mean(np.all(b <= c, axis=1)))
            se = math.sqrt(
                pa * (1 - pa) / a.shape[0] + pb * (1 - pb) / b.shape[0]
            )
            z = (pa - pb) / max(se, 1e-300) if (se > 0 or pa <= pb) else math.inf
            worst = max(worst, z)
    return OrderVerdict("uo_lo_witness", _outcome_from_margin(worst), worst)


def dcx_witness_test(
    a_block: np.ndarray, b_block: np.ndarray, confidence: float = 0.95
) -> OrderVerdict:
    """Necessary dcx witnesses: componentwise stop-loss dominance plus
    stop-loss dominance of every pairwise coordinate sum."""
    a = np.asarray(a_block, float)
    b = np.asarray(b_block, float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ContractError("need (n, d) blocks of equal dimension")
    d = a.shape[1]
    worst = -math.inf
    checks = {}
    for j in range(d):
        grid = pooled_grid(a[:, j], b[:, j])
        m, _, _, _ = _stop_loss_violation(a[:, j], b[:, j], grid)
        checks[f"coord-{j}"] = m
        worst = max(worst, m)
    for i in range(d):
        for j in range(i + 1, d):
            sa, sb = a[:, i] + a[:, j], b[:, i] + b[:, j]
            grid = pooled_grid(sa, sb)
            m, _, _, _ = _stop_loss_violation(sa, sb, grid)
            checks[f"pair-{i}-{j}"] = m
            worst = max(worst, m)
    return OrderVerdict("dcx_witness", _outcome_from_margin(worst), worst, checks)


# ---------------------------------------------------------------------------
# experiments


def weighted_path_sums(paths: np.ndarray, weights: Optional[np.ndarray]) -> np.ndarray:
    """sum_t alpha_t * (sum over coordinates) of each path."""
    x = paths.sum(axis=2)  # (paths, T)
    if weights is None:
        return x.sum(axis=1)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ContractError("weights must be nonnegative")
    if w.size != x.shape[1]:
        raise ContractError("one weight per time step required")
    return x @ w


@dataclass
class PartialSumReport:
    verdict: OrderVerdict
    curve_lo: StopLossCurve
    curve_hi: StopLossCurve


def partial_sum_order_experiment(
    pair: SmPair,
    weights: Optional[np.ndarray],
    stream: RandomStream,
    paths: int,
) -> PartialSumReport:
    """cx comparison of weighted partial sums for a certified sm pair."""
    lo = gen_process(pair.lo, stream.derive("lo"), paths)
    hi = gen_process(pair.hi, stream.derive("hi"), paths)
    s_lo = weighted_path_sums(lo, weights)
    s_hi = weighted_path_sums(hi, weights)
    verdict = cx_test(s_lo, s_hi)
    grid = verdict.detail["t_grid"]
    return PartialSumReport(
        verdict,
        stop_loss(s_lo, grid, stream.derive("boot-lo")),
        stop_loss(s_hi, grid, stream.derive("boot-hi")),
    )


def marginal_strength_experiment(
    base: ProcessSpec,
    shift_schedule: Sequence[MarginalShift],
    stream: RandomStream,
    paths: int,
    weights: Optional[np.ndarray] = None,
) -> List[OrderVerdict]:
    """Shift the first k coordinates (k = 0..n) and compare partial sums.

    Requires a conditionally increasing temporal copula (Gaussian rho >= 0,
    comonotone, or independence); every k <= k' pair must satisfy the
    increasing convex order of the weighted sums.
    """
    cop = base.temporal_copula
    if cop is not None and cop.kind in ("gaussian_exchangeable", "gaussian_ar1"):
        if cop.rho < 0:
            raise ContractError(
                "negative temporal correlation is not conditionally increasing; "
                "use the dependence-bias experiment for that regime"
            )
    if cop is not None and cop.kind == "countermonotone":
        raise ContractError("countermonotone structure refused here")
    n_coords = base.n_coords
    if len(shift_schedule) != n_coords:
        raise ContractError("one shift per coordinate required")
    sums = []
    for k in range(n_coords + 1):
        shifts = [
            [shift_schedule[j] if j < k else MarginalShift() for j in range(n_coords)]
            for _ in range(base.horizon)
        ]
        spec_k = ProcessSpec(
            base.horizon, base.marginals, base.temporal_copula, base.spatial_copula,
            shifts=shifts, allow_both_axes=base.allow_both_axes,
        )
        sums.append(weighted_path_sums(gen_process(spec_k, stream.derive(f"k{k}"), paths),
                                       weights))
    verdicts = []
    for k in range(n_coords + 1):
        for k2 in range(k + 1, n_coords + 1):
            v = icx_test(sums[k], sums[k2])
            v.detail["pair"] = (k, k2)
            verdicts.append(v)
    return verdicts


@dataclass
class DependenceBiasReport:
    deltas: np.ndarray
    margins: np.ndarray
    outcomes: list
    delta_star: float

    def __str__(self) -> str:
        return f"delta* = {self.delta_star:g}"


def dependence_bias_experiment(
    neg: ProcessSpec,
    marginal_boost: Sequence[float],
    stream: RandomStream,
    paths: int,
    weights: Optional[np.ndarray] = None,
) -> DependenceBiasReport:
    """How much marginal mean boost the dependent process absorbs while its
    partial sum stays icx-dominated by the independent-baseline sum.

    The comparison is restricted to the upper stop-loss region t >= pooled
    mean: increasing-convex test functions separate mean-vs-variability
    trade-offs there, which is where backlog-style functionals live. A
    negatively dependent process keeps a strictly positive delta*; a
    positively dependent one fails already at delta = 0.
    """
    axis_cop = neg.spatial_copula if neg.spatial_copula is not None else neg.temporal_copula
    baseline = ProcessSpec(
        neg.horizon, neg.marginals,
        CopulaSpec.independence(neg.horizon) if neg.spatial_copula is None else None,
        CopulaSpec.independence(neg.n_coords) if neg.spatial_copula is not None else None,
    )
    s_base = weighted_path_sums(gen_process(baseline, stream.derive("baseline"), paths), weights)
    deltas = np.asarray(sorted(marginal_boost), dtype=float)
    margins = np.empty(deltas.size)
    outcomes = []
    delta_star = 0.0
    for i, delta in enumerate(deltas):
        shifts = [
            [MarginalShift(loc=float(delta)) for _ in range(neg.n_coords)]
            for _ in range(neg.horizon)
        ]
        boosted = ProcessSpec(
            neg.horizon, neg.marginals, neg.temporal_copula, neg.spatial_copula, shifts=shifts
        )
        s_neg = weighted_path_sums(
            gen_process(boosted, stream.derive(f"boost-{delta:g}"), paths), weights
        )
        pooled = np.concatenate([s_neg, s_base])
        lo_t = float(np.mean(pooled))
        hi_t = float(np.quantile(pooled, GRID_SPAN[1]))
        grid = np.unique(np.linspace(lo_t, hi_t, GRID_POINTS))
        v = icx_test(s_neg, s_base, t_grid=grid)
        margins[i] = v.margin
        outcomes.append(v.outcome)
        if v.outcome == "holds":
            delta_star = float(delta)
    return DependenceBiasReport(deltas, margins, outcomes, delta_star)


@dataclass(frozen=True)
class CountsSpec:
    """Vector of Poisson counts with independent or comonotone coupling."""

    kind: str                 # "independent" | "comonotone"
    rate: float
    dim: int

    def __post_init__(self):
        if self.kind not in ("independent", "comonotone"):
            raise ContractError("counts kind must be independent or comonotone")
        if self.rate <= 0 or self.dim < 1:
            raise ContractError("need rate > 0 and dim >= 1")

    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        cols = []
        for j in range(self.dim):
            label = "u0" if self.kind == "comonotone" else f"u{j}"
            u = stream.derive(label).generator.uniform(size=n)
            cols.append(stats.poisson.ppf(u, self.rate).astype(np.int64))
        return np.stack(cols, axis=1)


def random_sum_experiment(
    counts_lo: CountsSpec,
    counts_hi: CountsSpec,
    increments: Sequence[DistributionSpec],
    stream: RandomStream,
    n: int,
    spread_step: float = 0.0,
) -> OrderVerdict:
    """dcx witnesses on coordinate-wise compound sums under ordered counts.

    Counts and increments come from disjoint derived streams (the theorem
    requires their independence); both count vectors share the same
    underlying uniforms (common random numbers), and increments are shared
    per coordinate. spread_step > 0 applies a mean-preserving spread growing
    with the increment index j, realizing cx-increasing increments.
    """
    if counts_lo.dim != counts_hi.dim or counts_lo.dim != len(increments):
        raise ContractError("dimension mismatch between counts and increments")
    if counts_lo.rate != counts_hi.rate:
        raise ContractError("count marginals must match (equal Poisson rates)")
    c_stream = stream.derive("counts")
    m_lo = counts_lo.sample(c_stream, n)
    m_hi = counts_hi.sample(c_stream, n)
    sums_lo = np.empty((n, counts_lo.dim))
    sums_hi = np.empty((n, counts_lo.dim))
    for j, inc in enumerate(increments):
        pool_size = int(max(m_lo[:, j].sum(), m_hi[:, j].sum()))
        pool = inc.sample(stream.derive(f"inc/{j}"), max(pool_size, 1))
        mu = inc.mean()
        for counts, sums in ((m_lo, sums_lo), (m_hi, sums_hi)):
            c = counts[:, j]
            starts = np.concatenate([[0], np.cumsum(c)[:-1]])
            vals = pool[: int(c.sum())]
            if spread_step > 0.0:
                within = np.arange(vals.size) - np.repeat(starts, c)
                vals = mu + (1.0 + spread_step * within) * (vals - mu)
            prefix = np.concatenate([[0.0], np.cumsum(vals)])
            sums[:, j] = prefix[starts + c] - prefix[starts]
    return dcx_witness_test(sums_lo, sums_hi)


def block_sum_order_experiment(
    pair: SmPair,
    windows: Sequence[Sequence[int]],
    stream: RandomStream,
    paths: int,
) -> List[OrderVerdict]:
    """icx of window sums over disjoint time windows for a certified pair."""
    seen = set()
    for w in windows:
        if seen & set(w):
            raise ContractError("windows must be disjoint")
        seen |= set(w)
    lo = gen_process(pair.lo, stream.derive("lo"), paths).sum(axis=2)
    hi = gen_process(pair.hi, stream.derive("hi"), paths).sum(axis=2)
    verdicts = []
    for w in windows:
        idx = np.asarray(list(w), dtype=int)
        v = icx_test(lo[:, idx].sum(axis=1), hi[:, idx].sum(axis=1))
        v.detail["window"] = list(w)
        verdicts.append(v)
    return verdicts
