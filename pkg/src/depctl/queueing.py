"""Discrete-time queue driven by arrival and service processes.

Backlog follows the Lindley recursion; delay is the virtual first-passage
time of cumulative arrivals into cumulative service. Service can be an
explicit parameter process or channel-driven (per-slot capacity times slot
duration with a power scale knob), with temporal dependence injected into
the channel gains through a Gaussian copula. Compared configurations share
per-path base streams (common random numbers), which is what makes quantile
differences testable at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import kernels
from .channel import (
    CapacityParams,
    ChannelModel,
    ContractError,
    LN2,
    _normalization_scale,
    draw_power_log,
)
from .dependence import CopulaSpec, ProcessSpec, gen_process, sample_copula
from .distributions import DistributionSpec
from .streams import RandomStream

WARMUP_FRACTION = 0.2
QUANTILE_LEVELS = (0.5, 0.9, 0.99)
BOOT_PATHS = 200


@dataclass(frozen=True)
class ChannelService:
    """Service = slot_duration * instantaneous capacity, with a power knob.

    gain_copula (Gaussian family) couples each entry magnitude over time;
    phases stay i.i.d. uniform. power_scale multiplies the SNR, which is the
    quantity traded in the dependence-for-power experiments. The reference
    configuration of a comparison should use gaussian_ar1(rho=0) so that
    both configurations consume randomness identically (common random
    numbers).
    """

    model: ChannelModel
    params: CapacityParams
    power_scale: float = 1.0
    slot_duration: float = 1.0
    gain_copula: Optional[CopulaSpec] = None
    power_law: Optional[DistributionSpec] = None

    def __post_init__(self):
        if self.power_scale <= 0 or self.slot_duration <= 0:
            raise ContractError("power_scale and slot_duration must be positive")

    def with_power_scale(self, kappa: float) -> "ChannelService":
        return replace(self, power_scale=float(kappa))

    def to_config(self) -> dict:
        return {
            "model": self.model.to_config(),
            "params": self.params.to_config(),
            "power_scale": self.power_scale,
            "slot_duration": self.slot_duration,
            "gain_copula": self.gain_copula.to_config() if self.gain_copula else None,
            "power_law": self.power_law.to_config() if self.power_law else None,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "ChannelService":
        return cls(
            model=ChannelModel.from_config(cfg["model"]),
            params=CapacityParams.from_config(cfg["params"]),
            power_scale=cfg.get("power_scale", 1.0),
            slot_duration=cfg.get("slot_duration", 1.0),
            gain_copula=CopulaSpec.from_config(cfg["gain_copula"])
            if cfg.get("gain_copula")
            else None,
            power_law=DistributionSpec.from_config(cfg["power_law"])
            if cfg.get("power_law")
            else None,
        )


@dataclass(frozen=True)
class QueueConfig:
    arrival: ProcessSpec                      # one coordinate, bits per slot
    service: Union[ProcessSpec, ChannelService]
    horizon: int
    paths: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ContractError("horizon must be >= 1")
        if self.arrival.n_coords != 1:
            raise ContractError("arrival process must have one coordinate")
        if self.arrival.horizon != self.horizon:
            raise ContractError("arrival horizon must match the queue horizon")
        if isinstance(self.service, ProcessSpec):
            if self.service.n_coords != 1 or self.service.horizon != self.horizon:
                raise ContractError("service process must be 1-coordinate at queue horizon")

    def to_config(self) -> dict:
        if isinstance(self.service, ProcessSpec):
            service = {"kind": "process", **self.service.to_config()}
        else:
            service = {"kind": "channel", **self.service.to_config()}
        return {
            "arrival": self.arrival.to_config(),
            "service": service,
            "horizon": self.horizon,
            "paths": self.paths,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "QueueConfig":
        svc_cfg = dict(cfg["service"])
        kind = svc_cfg.pop("kind")
        if kind == "process":
            service = ProcessSpec.from_config(svc_cfg)
        elif kind == "channel":
            service = ChannelService.from_config(svc_cfg)
        else:
            raise ContractError(f"unknown service kind {kind!r}")
        return cls(
            arrival=ProcessSpec.from_config(cfg["arrival"]),
            service=service,
            horizon=cfg["horizon"],
            paths=cfg["paths"],
        )


@dataclass
class BacklogStats:
    per_slot_mean: np.ndarray
    quantiles: dict                    # level -> value (stationary window)
    quantile_ci: dict                  # level -> (lo, hi)
    exceedance_x: np.ndarray
    exceedance_p: np.ndarray
    exceedance_ci: np.ndarray          # (m, 2)
    load: float                        # mean arrival / mean service
    unstable_load: bool                # mean(a) >= mean(s)
    nonstationary: bool                # drift detected across the window


@dataclass
class PowerTradeReport:
    q: float
    kappa_base: float
    kappa_star: float
    saving: float                      # 1 - kappa_star / kappa_base
    matched_gap: float                 # quantile gap at kappa_star
    target_quantile: float
    advantage_z: float                 # (target - neg quantile at base power)/se
    no_crossing: bool


# ---------------------------------------------------------------------------
# core recursions


def lindley(a_path: np.ndarray, s_path: np.ndarray) -> np.ndarray:
    """Backlog path: B_t = max(B_{t-1} + a_t - s_t, 0), started at zero."""
    a = np.asarray(a_path, dtype=float)
    s = np.asarray(s_path, dtype=float)
    if a.shape != s.shape:
        raise ContractError(f"arrival/service length mismatch: {a.shape} vs {s.shape}")
    x = np.atleast_2d(a - s)
    return kernels.lindley_batch(np.ascontiguousarray(x)).reshape(a.shape)


def delay_path(a_path: np.ndarray, s_path: np.ndarray):
    """Virtual first-passage delay per slot.

    D_t = min{d >= 0 : cumulative arrivals through t <= cumulative service
    through t+d}; returns (delays, censored) where censored marks slots whose
    passage did not occur inside the horizon (delay truncated at T-1-t).
    """
    a = np.asarray(a_path, dtype=float)
    s = np.asarray(s_path, dtype=float)
    if a.shape != s.shape:
        raise ContractError(f"arrival/service length mismatch: {a.shape} vs {s.shape}")
    arr = np.cumsum(a)
    srv = np.cumsum(s)
    t_idx = np.arange(a.size)
    k = np.searchsorted(srv, arr, side="left")
    censored = k >= a.size
    k = np.minimum(k, a.size - 1)
    delays = np.maximum(k - t_idx, 0)
    return delays, censored


# ---------------------------------------------------------------------------
# service generation


def _gen_channel_service(svc: ChannelService, stream: RandomStream, paths: int,
                         horizon: int) -> np.ndarray:
    model = svc.model
    if model.subchannels != 1:
        raise ContractError("channel-driven service supports flat channels only")
    n_entries = model.n_r * model.n_t
    total = paths * horizon
    mags = np.empty((paths, horizon, n_entries))
    cop = svc.gain_copula or CopulaSpec.gaussian_ar1(0.0, horizon)
    if cop.dim != horizon:
        raise ContractError("gain copula dimension must equal the horizon")
    eps = np.finfo(float).tiny
    for e in range(n_entries):
        u = sample_copula(cop, stream.derive(f"gain/{e}"), paths)
        mags[:, :, e] = model.entry_law.quantile(np.clip(u, eps, 1.0 - 1e-16))
    if model.normalization:
        mags *= _normalization_scale(model.entry_law)
    phases = stream.derive("phase").generator.uniform(0.0, 2.0 * math.pi, size=(total, n_entries))
    H = (mags.reshape(total, n_entries) * np.exp(1j * phases)).reshape(
        total, model.n_r, model.n_t
    )
    grams = np.einsum("bij,bkj->bik", H, H.conj(), optimize=True)
    lam, _, _ = kernels.jacobi_eigh_batch(grams)
    gain = svc.power_scale * svc.params.rho / svc.params.n_t
    if svc.power_law is not None:
        log_p = draw_power_log(svc.power_law, stream.derive("power"), total)
        with np.errstate(over="ignore"):
            gain = gain * np.exp(log_p)[:, None]
    c = svc.params.w * np.sum(np.log1p(gain * np.maximum(lam, 0.0)), axis=-1) / LN2
    return (svc.slot_duration * c).reshape(paths, horizon)


def generate_queue_inputs(config: QueueConfig, stream: RandomStream):
    """(arrivals, services) as (paths, horizon) arrays with derived streams."""
    a = gen_process(config.arrival, stream.derive("arrival"), config.paths)[:, :, 0]
    if isinstance(config.service, ProcessSpec):
        s = gen_process(config.service, stream.derive("service"), config.paths)[:, :, 0]
    else:
        s = _gen_channel_service(config.service, stream.derive("service"), config.paths,
                                 config.horizon)
    return a, s


# ---------------------------------------------------------------------------
# statistics


def backlog_paths(config: QueueConfig, stream: RandomStream) -> np.ndarray:
    a, s = generate_queue_inputs(config, stream)
    return kernels.lindley_batch(np.ascontiguousarray(a - s))


def backlog_stats(config: QueueConfig, stream: RandomStream,
                  n_grid: int = 20) -> BacklogStats:
    """Stationary-window backlog statistics with path-bootstrap bands."""
    if config.paths < 200:
        raise ContractError(f"need at least 200 paths, got {config.paths}")
    a, s = generate_queue_inputs(config, stream)
    backlog = kernels.lindley_batch(np.ascontiguousarray(a - s))
    warm = int(WARMUP_FRACTION * config.horizon)
    window = backlog[:, warm:]
    pooled = window.ravel()

    quantiles = {q: float(np.quantile(pooled, q)) for q in QUANTILE_LEVELS}
    rng = stream.derive("bootstrap").generator
    boot_idx = rng.integers(0, config.paths, size=(BOOT_PATHS, config.paths))
    boot_q = {q: np.empty(BOOT_PATHS) for q in QUANTILE_LEVELS}
    for b in range(BOOT_PATHS):
        sample = window[boot_idx[b]].ravel()
        for q in QUANTILE_LEVELS:
            boot_q[q][b] = np.quantile(sample, q)
    quantile_ci = {
        q: (float(np.percentile(boot_q[q], 2.5)), float(np.percentile(boot_q[q], 97.5)))
        for q in QUANTILE_LEVELS
    }

    positive = pooled[pooled > 0]
    if positive.size >= 50:
        levels = np.unique(np.quantile(positive, np.linspace(0.3, 0.998, n_grid)))
        p_hat = np.mean(pooled[:, None] > levels[None, :], axis=0)
        boot_p = np.empty((BOOT_PATHS, levels.size))
        for b in range(BOOT_PATHS):
            boot_p[b] = np.mean(window[boot_idx[b]].reshape(-1)[:, None] > levels[None, :],
                                axis=0)
        ci = np.stack(
            [np.percentile(boot_p, 2.5, axis=0), np.percentile(boot_p, 97.5, axis=0)], axis=1
        )
    else:
        levels = np.array([])
        p_hat = np.array([])
        ci = np.empty((0, 2))

    half = window.shape[1] // 2
    m1 = window[:, :half].mean(axis=1)
    m2 = window[:, half:].mean(axis=1)
    drift = float(np.mean(m2 - m1))
    drift_se = float(np.std(m2 - m1, ddof=1) / math.sqrt(config.paths))
    nonstationary = abs(drift) > 4.0 * max(drift_se, 1e-300)

    mean_a, mean_s = float(np.mean(a)), float(np.mean(s))
    return BacklogStats(
        per_slot_mean=backlog.mean(axis=0),
        quantiles=quantiles,
        quantile_ci=quantile_ci,
        exceedance_x=levels,
        exceedance_p=p_hat,
        exceedance_ci=ci,
        load=mean_a / mean_s if mean_s > 0 else math.inf,
        unstable_load=mean_a >= mean_s,
        nonstationary=nonstationary,
    )


def _stationary_quantile(config: QueueConfig, stream: RandomStream, q: float):
    backlog = backlog_paths(config, stream)
    warm = int(WARMUP_FRACTION * config.horizon)
    window = backlog[:, warm:]
    return float(np.quantile(window.ravel(), q)), window


def _quantile_se(window: np.ndarray, q: float, stream: RandomStream,
                 n_boot: int = BOOT_PATHS) -> float:
    rng = stream.generator
    paths = window.shape[0]
    vals = np.empty(n_boot)
    flat = window.reshape(paths, -1)
    for b in range(n_boot):
        idx = rng.integers(0, paths, size=paths)
        vals[b] = np.quantile(flat[idx].ravel(), q)
    return float(np.std(vals, ddof=1))


def power_tradeoff(
    neg_config: QueueConfig,
    ref_config: QueueConfig,
    q: float,
    tolerance: float,
    stream: RandomStream,
    max_iter: int = 40,
) -> PowerTradeReport:
    """Power scale kappa* at which the dependent config matches the reference
    backlog q-quantile; saving = 1 - kappa*/kappa_base.

    Both configurations run on the same stream (common random numbers). The
    search covers kappa/kappa_base in [0.05, 2]; if the curves never cross
    the report carries no_crossing=True and a nonpositive saving.
    """
    if not isinstance(neg_config.service, ChannelService) or not isinstance(
        ref_config.service, ChannelService
    ):
        raise ContractError("power_tradeoff requires channel-driven service on both configs")
    kappa_base = ref_config.service.power_scale
    target, _ = _stationary_quantile(ref_config, stream, q)

    def neg_quantile(kappa: float):
        cfg = replace(neg_config, service=neg_config.service.with_power_scale(kappa))
        return _stationary_quantile(cfg, stream, q)

    q_at_base, window_base = neg_quantile(kappa_base)
    se = _quantile_se(window_base, q, stream.derive("qse"))
    advantage_z = (target - q_at_base) / max(se, 1e-300)

    lo, hi = 0.05 * kappa_base, 2.0 * kappa_base
    g_lo = neg_quantile(lo)[0] - target
    g_hi = neg_quantile(hi)[0] - target
    if not (g_lo >= 0 >= g_hi):
        kappa_star = kappa_base if abs(advantage_z) <= 2.0 else (hi if g_hi > 0 else lo)
        return PowerTradeReport(q, kappa_base, kappa_star, 1.0 - kappa_star / kappa_base,
                                math.nan, target, advantage_z, True)
    kappa_star, gap = kappa_base, q_at_base - target
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = neg_quantile(mid)[0] - target
        if abs(g_mid) <= tolerance:
            kappa_star, gap = mid, g_mid
            break
        if g_mid > 0:
            lo = mid
        else:
            hi = mid
        kappa_star, gap = mid, g_mid
        if hi - lo < 1e-4 * kappa_base:
            break
    return PowerTradeReport(q, kappa_base, kappa_star, 1.0 - kappa_star / kappa_base,
                            gap, target, advantage_z, False)
