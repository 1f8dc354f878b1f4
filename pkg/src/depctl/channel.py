"""MIMO channel matrices, spectral decomposition, and capacity.

Capacity is computed from the eigenvalues of the gram matrix HH*. With
transmitter side information the power split over eigenmodes is the
waterfilling optimum (bisection on the water level); without it the budget
spreads evenly over transmit antennas. Frequency-selective channels are
handled as block-diagonal grams. Random transmit power is folded into the
SNR draw by draw; all log-det arithmetic runs through logaddexp so that
astronomically large power draws (super-heavy laws) stay finite.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .distributions import DistributionSpec
from .streams import RandomStream

LN2 = math.log(2.0)
RANK_RTOL = 1e-9          # eigenvalue > RANK_RTOL * lambda_max counts toward rank
HERMITIAN_RTOL = 1e-12    # admissible relative asymmetry of eigensolver input
WATERFILL_ATOL = 1e-12    # budget tolerance of the water-level bisection
_CHUNK = 1 << 16          # fixed chunk size keeps results thread-count invariant
_CALIBRATION_SEED = 0x5EEDCA1B
_CALIBRATION_DRAWS = 100_000


class ContractError(ValueError):
    """An operation precondition was violated."""


class DomainError(ValueError):
    """Numeric input outside the mathematical domain of the operation."""


class PowerDomainError(ValueError):
    """Too many nonpositive power draws for the resample policy."""


@dataclass(frozen=True)
class CapacityParams:
    """Bandwidth W (Hz), SNR ratio rho = P/(N0 W), transmit antennas, CSIT flag."""

    w: float = 1.0
    rho: float = 1.0
    n_t: int = 1
    csit: str = "unknown"  # "known" | "unknown"

    def __post_init__(self):
        if self.w <= 0 or self.rho <= 0 or self.n_t < 1:
            raise ContractError(
                f"need w > 0, rho > 0, n_t >= 1; got w={self.w}, rho={self.rho}, n_t={self.n_t}"
            )
        if self.csit not in ("known", "unknown"):
            raise ContractError(f"csit must be 'known' or 'unknown', got {self.csit!r}")

    def to_config(self) -> dict:
        return {"w": self.w, "rho": self.rho, "n_t": self.n_t, "csit": self.csit}

    @classmethod
    def from_config(cls, cfg: dict) -> "CapacityParams":
        return cls(**cfg)


@dataclass(frozen=True)
class CapacitySample:
    c: float            # bits/s
    lambda_max: float
    trace: float
    power: float        # realized transmit power draw (1.0 when deterministic)

    def __post_init__(self):
        if not self.c >= 0.0:
            raise ContractError(f"capacity must be nonnegative, got {self.c}")


@dataclass
class HermitianEigenResult:
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # orthonormal columns
    residual: float           # ||A - Q diag Q*||_F / ||A||_F


@dataclass(frozen=True)
class ChannelModel:
    """Entry-law channel: |H_ij| i.i.d. per entry_law, phases uniform.

    normalization=True rescales entries so E[|H_ij|^2] = 1, using an RMS
    constant calibrated once per entry law on a fixed dedicated stream (so
    the constant does not depend on the experiment seed). subchannels > 1
    selects the block-diagonal frequency-selective model.
    """

    n_r: int
    n_t: int
    entry_law: DistributionSpec
    normalization: bool = True
    subchannels: int = 1

    def __post_init__(self):
        if self.n_r < 1 or self.n_t < 1 or self.subchannels < 1:
            raise ContractError("n_r, n_t, subchannels must all be >= 1")

    def to_config(self) -> dict:
        return {
            "n_r": self.n_r,
            "n_t": self.n_t,
            "entry_law": self.entry_law.to_config(),
            "normalization": self.normalization,
            "subchannels": self.subchannels,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "ChannelModel":
        cfg = dict(cfg)
        cfg["entry_law"] = DistributionSpec.from_config(cfg["entry_law"])
        return cls(**cfg)


class CapacityDraws:
    """Columnar batch of capacity samples (c, lambda_max, trace, power).

    log_power holds ln p exactly even where p itself overflows float64.
    """

    def __init__(self, c, lambda_max, trace, power, log_power=None):
        self.c = np.asarray(c, dtype=float)
        self.lambda_max = np.asarray(lambda_max, dtype=float)
        self.trace = np.asarray(trace, dtype=float)
        self.power = np.asarray(power, dtype=float)
        if log_power is None:
            with np.errstate(divide="ignore"):
                log_power = np.log(self.power)
        self.log_power = np.asarray(log_power, dtype=float)

    def __len__(self) -> int:
        return self.c.size

    def __getitem__(self, i: int) -> CapacitySample:
        return CapacitySample(
            float(self.c[i]), float(self.lambda_max[i]), float(self.trace[i]), float(self.power[i])
        )


# ---------------------------------------------------------------------------
# gram and eigendecomposition


def gram(H: np.ndarray) -> np.ndarray:
    """HH* (Hermitian PSD, rows x rows)."""
    H = np.asarray(H, dtype=np.complex128)
    return H @ H.conj().T


def _gram_batch(H: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...kj->...ik", H, H.conj(), optimize=True)


def eigen_hermitian(A: np.ndarray, tol: float = 1e-13) -> HermitianEigenResult:
    """Cyclic-Jacobi eigendecomposition of a Hermitian matrix.

    Raises ContractError if A deviates from Hermitian symmetry by more than
    HERMITIAN_RTOL in relative Frobenius norm.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {A.shape}")
    norm = np.linalg.norm(A)
    asym = np.linalg.norm(A - A.conj().T)
    if norm > 0 and asym > HERMITIAN_RTOL * norm:
        raise ContractError(f"matrix is not Hermitian: relative asymmetry {asym / norm:.3e}")
    sym = 0.5 * (A + A.conj().T)
    lam, vecs, _ = kernels.jacobi_eigh_batch(sym[None, :, :], tol=tol)
    lam, vecs = lam[0], vecs[0]
    recon = (vecs * lam) @ vecs.conj().T
    residual = float(np.linalg.norm(A - recon) / norm) if norm > 0 else 0.0
    return HermitianEigenResult(eigenvalues=lam, eigenvectors=vecs, residual=residual)


def rank_from_eigenvalues(eigenvalues: np.ndarray) -> int:
    lam_max = float(np.max(eigenvalues, initial=0.0))
    if lam_max <= 0.0:
        return 0
    return int(np.sum(eigenvalues > RANK_RTOL * lam_max))


# ---------------------------------------------------------------------------
# waterfilling


def waterfill(eigenvalues: np.ndarray, budget: float, gain: float):
    """Power split maximizing sum log2(1 + gain * gamma_i * lam_i), sum gamma = budget.

    Bisection on the water level until the allocated budget is within
    WATERFILL_ATOL (relative). Equal eigenvalues receive equal shares by
    construction. Returns (capacity_log2_sum, gamma allocation).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    gamma = np.zeros_like(lam)
    positive = lam > 0
    if budget <= 0 or not positive.any() or gain <= 0:
        return 0.0, gamma
    inv = 1.0 / (gain * lam[positive])
    lo = float(np.min(inv))
    hi = float(np.max(inv) + budget)
    target = budget
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        used = np.sum(np.maximum(mid - inv, 0.0))
        if used > target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= WATERFILL_ATOL * max(1.0, target):
            break
    level = 0.5 * (lo + hi)
    alloc = np.maximum(level - inv, 0.0)
    used = float(np.sum(alloc))
    if used > 0:
        alloc *= target / used  # close the residual budget gap exactly
    gamma[positive] = alloc
    cap = float(np.sum(np.log1p(gain * lam[positive] * alloc)) / LN2)
    return cap, gamma


def _waterfill_capacity_batch(lam: np.ndarray, budget: float, gain: np.ndarray) -> np.ndarray:
    """Vectorized water-level bisection across a batch (lam: (b, r))."""
    lam = np.maximum(lam, 0.0)
    positive = lam > 0
    gain = np.broadcast_to(np.asarray(gain, dtype=float)[:, None], lam.shape)
    with np.errstate(divide="ignore"):
        inv = np.where(positive, 1.0 / np.maximum(gain * lam, 1e-300), np.inf)
    finite = np.where(positive, inv, 0.0)
    lo = np.where(positive.any(axis=1), np.min(np.where(positive, inv, np.inf), axis=1), 0.0)
    hi = np.max(finite, axis=1) + budget
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        used = np.sum(np.maximum(mid[:, None] - inv, 0.0), axis=1)
        over = used > budget
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
    level = 0.5 * (lo + hi)
    alloc = np.maximum(level[:, None] - inv, 0.0)
    used = np.sum(alloc, axis=1)
    scale = np.where(used > 0, budget / np.maximum(used, 1e-300), 0.0)
    alloc *= scale[:, None]
    return np.sum(np.log1p(gain * lam * alloc), axis=1) / LN2


# ---------------------------------------------------------------------------
# capacity formulas


def _equal_alloc_capacity_log2(lam: np.ndarray, gain: float) -> float:
    lam = np.asarray(lam, dtype=float)
    return float(np.sum(np.log1p(gain * np.maximum(lam, 0.0))) / LN2)


def capacity_flat(H: np.ndarray, params: CapacityParams) -> CapacitySample:
    """Flat-channel capacity in bits/s for one realization."""
    A = gram(H)
    eig = eigen_hermitian(A)
    lam = eig.eigenvalues
    trace = float(np.sum(lam))
    lam_max = float(lam[-1]) if lam.size else 0.0
    gain = params.rho / params.n_t
    if params.csit == "known":
        cap_wf, _ = waterfill(lam, budget=float(params.n_t), gain=gain)
        c = params.w * cap_wf
    else:
        c = params.w * _equal_alloc_capacity_log2(lam, gain)
    return CapacitySample(c=c, lambda_max=lam_max, trace=trace, power=1.0)


def capacity_freq_selective(
    blocks: Sequence[np.ndarray], params: CapacityParams
) -> CapacitySample:
    """Frequency-selective capacity via the block-diagonal gram."""
    if len(blocks) == 0:
        raise ContractError("need at least one sub-channel block")
    shapes = {np.asarray(b).shape for b in blocks}
    if len(shapes) != 1:
        raise ContractError(f"sub-channel blocks must share dimensions, got {shapes}")
    n = len(blocks)
    eigs = []
    for Hb in blocks:
        eigs.append(eigen_hermitian(gram(Hb)).eigenvalues)
    all_lam = np.concatenate(eigs)
    trace = float(np.sum(all_lam))
    lam_max = float(np.max(all_lam)) if all_lam.size else 0.0
    gain = params.rho / params.n_t
    if params.csit == "known":
        cap_wf, _ = waterfill(all_lam, budget=float(params.n_t * n), gain=gain)
        c = (params.w / n) * cap_wf
    else:
        c = (params.w / n) * _equal_alloc_capacity_log2(all_lam, gain)
    return CapacitySample(c=c, lambda_max=lam_max, trace=trace, power=1.0)


def logdet_series_check(eigenvalues: np.ndarray, z: float, k_terms: int) -> float:
    """Residual of the truncated trace-power series of log det(I + z*Lam).

    Valid on |z| * max(lam) < 1 where the series converges; the residual must
    shrink as the truncation order grows.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if k_terms < 1:
        raise DomainError(f"need at least one series term, got {k_terms}")
    if lam.size and abs(z) * float(np.max(np.abs(lam))) >= 1.0:
        raise DomainError("series diverges: |z| * max eigenvalue must be < 1")
    exact = float(np.sum(np.log1p(z * lam)))
    ks = np.arange(1, k_terms + 1, dtype=float)
    powers = np.power.outer(lam, ks)  # (n, K)
    traces = powers.sum(axis=0)
    series = float(np.sum(((-1.0) ** (ks + 1.0)) / ks * np.power(z, ks) * traces))
    return abs(exact - series)


# ---------------------------------------------------------------------------
# channel sampling


@functools.lru_cache(maxsize=None)
def _normalization_scale(entry_law: DistributionSpec) -> float:
    """1/RMS of the entry magnitude, from a fixed calibration stream."""
    stream = RandomStream(_CALIBRATION_SEED, f"normalize/{entry_law}")
    draws = entry_law.sample(stream, _CALIBRATION_DRAWS)
    rms = math.sqrt(float(np.mean(np.square(draws))))
    if rms <= 0:
        raise ContractError(f"entry law {entry_law} has zero RMS; cannot normalize")
    return 1.0 / rms


def draw_channel_entries(model: ChannelModel, stream: RandomStream, n: int) -> np.ndarray:
    """(n, subchannels, n_r, n_t) complex channel realizations."""
    k = model.subchannels * model.n_r * model.n_t
    mags = model.entry_law.sample(stream.derive("magnitude"), n * k)
    phases = stream.derive("phase").generator.uniform(0.0, 2.0 * math.pi, size=n * k)
    entries = mags * np.exp(1j * phases)
    if model.normalization:
        entries = entries * _normalization_scale(model.entry_law)
    return entries.reshape(n, model.subchannels, model.n_r, model.n_t)


def draw_power_log(
    power_law: DistributionSpec, stream: RandomStream, n: int, reject_frac: float = 1e-3
) -> np.ndarray:
    """ln p draws; nonpositive draws are resampled, erroring past the budget."""
    out = np.empty(n)
    filled = 0
    rejected = 0
    attempt = 0
    while filled < n:
        label = "power" if attempt == 0 else f"power-retry-{attempt}"
        chunk = power_law.sample_log(stream.derive(label), n - filled)
        good = chunk[np.isfinite(chunk)]  # ln p finite <=> 0 < p < inf
        rejected += (n - filled) - good.size
        if rejected > max(1.0, reject_frac * n):
            raise PowerDomainError(
                f"more than {reject_frac:.1%} of power draws from {power_law} were nonpositive"
            )
        out[filled : filled + good.size] = good
        filled += good.size
        attempt += 1
    return out


def _spectra_chunk(model: ChannelModel, stream: RandomStream, n: int) -> np.ndarray:
    """Eigenvalues of the drawn grams, (n, subchannels, n_r)."""
    entries = draw_channel_entries(model, stream, n)
    grams = _gram_batch(entries)  # (n, N, n_r, n_r)
    flat = grams.reshape(n * model.subchannels, model.n_r, model.n_r)
    lam, _, _ = kernels.jacobi_eigh_batch(flat)
    return lam.reshape(n, model.subchannels, model.n_r)


def _run_chunked(fn, stream: RandomStream, n: int, threads: int):
    """Apply fn(stream, size) over fixed-size chunks with derived streams.

    Chunking is independent of the thread count, so outputs are identical
    for any level of parallelism.
    """
    chunks = [(i, min(_CHUNK, n - i * _CHUNK)) for i in range((n + _CHUNK - 1) // _CHUNK)]

    def run(chunk):
        i, size = chunk
        return fn(stream.derive(f"chunk-{i}"), size)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, chunks))
    return [run(c) for c in chunks]


def draw_spectra(
    model: ChannelModel, stream: RandomStream, n: int, threads: int = 1
) -> np.ndarray:
    """n draws of all gram eigenvalues, shape (n, subchannels * n_r)."""
    parts = _run_chunked(lambda s, size: _spectra_chunk(model, s, size), stream, n, threads)
    return np.concatenate(parts).reshape(n, -1)


def _capacity_chunk(model, power_law, params, stream, n):
    lam = _spectra_chunk(model, stream, n)
    trace = lam.sum(axis=(1, 2))
    lam_max = lam.max(axis=(1, 2))

    if power_law is None:
        log_p = np.zeros(n)
    else:
        log_p = draw_power_log(power_law, stream, n)
    gain_log = math.log(params.rho) - math.log(params.n_t) + log_p

    nsub = model.subchannels
    if params.csit == "known":
        lam_all = lam.reshape(n, nsub * model.n_r)
        gains = np.exp(gain_log)
        cap = _waterfill_capacity_batch(lam_all, budget=float(params.n_t * nsub), gain=gains)
        c = (params.w / nsub) * cap
    else:
        with np.errstate(divide="ignore"):
            log_lam = np.where(lam > 0, np.log(np.maximum(lam, 1e-300)), -np.inf)
        terms = np.logaddexp(0.0, gain_log[:, None, None] + log_lam)  # ln(1 + g*p*lam)
        c = (params.w / nsub) * terms.sum(axis=(1, 2)) / LN2
    with np.errstate(over="ignore"):
        power = np.exp(log_p)
    return c, lam_max, trace, power, log_p


def sample_capacity(
    model: ChannelModel,
    power_law: Optional[DistributionSpec],
    params: CapacityParams,
    stream: RandomStream,
    n: int,
    threads: int = 1,
) -> CapacityDraws:
    """n i.i.d. coherence-period capacity draws.

    Work is split into fixed-size chunks with per-chunk derived streams, so
    the result is identical for any thread count. power_law=None (or a
    Constant(1)) reproduces the deterministic-power scenario.
    """
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    parts = _run_chunked(
        lambda s, size: _capacity_chunk(model, power_law, params, s, size), stream, n, threads
    )
    c = np.concatenate([p[0] for p in parts])
    lam_max = np.concatenate([p[1] for p in parts])
    trace = np.concatenate([p[2] for p in parts])
    power = np.concatenate([p[3] for p in parts])
    log_power = np.concatenate([p[4] for p in parts])
    return CapacityDraws(c, lam_max, trace, power, log_power)
