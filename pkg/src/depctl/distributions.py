"""Parametric marginal laws with known ground-truth tail classes.

Each family exposes a sampler, CDF, quantile, mean, and a tail-class label.
Magnitude laws (Rayleigh/Rice/Nakagami/Lognormal/Weibull) model channel
gains; Pareto-type laws model random transmit power; the log-Pareto family
is the package's concrete slowly-varying (super-heavy) example, defined as
exp(ParetoI) so that its survival function is a power of 1/log.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special, stats

from .streams import RandomStream

FAMILIES = (
    "rayleigh",
    "rice",
    "nakagami",
    "lognormal",
    "weibull",
    "pareto1",
    "exponential",
    "logpareto",
    "constant",
    "uniform",
)


class TailClass(enum.Enum):
    LIGHT_TAILED = "light_tailed"
    HEAVY_SUBEXPONENTIAL_ALL_MOMENTS = "heavy_subexponential_all_moments"
    REGULARLY_VARYING = "regularly_varying"
    SLOWLY_VARYING = "slowly_varying"


@dataclass(frozen=True)
class TailClassLabel:
    tail_class: TailClass
    index: Optional[float] = None  # regular-variation index, when applicable

    def __str__(self) -> str:
        if self.index is not None:
            return f"{self.tail_class.value}({self.index:g})"
        return self.tail_class.value


class ParameterError(ValueError):
    """A distribution parameter is outside its admissible domain."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ParameterError(message)


@dataclass(frozen=True)
class DistributionSpec:
    """A marginal law: family name plus family-specific parameters.

    Use the classmethod constructors; the config-file field names (see
    `to_config`) are part of the CLI contract.
    """

    family: str
    params: tuple  # ((name, value), ...) in canonical order

    # -- constructors ------------------------------------------------------

    @classmethod
    def rayleigh(cls, sigma: float) -> "DistributionSpec":
        _require(sigma > 0, f"rayleigh sigma must be > 0, got {sigma}")
        return cls("rayleigh", (("sigma", float(sigma)),))

    @classmethod
    def rice(cls, k: float, omega: float = 1.0) -> "DistributionSpec":
        _require(k >= 0, f"rice k must be >= 0, got {k}")
        _require(omega > 0, f"rice omega must be > 0, got {omega}")
        return cls("rice", (("k", float(k)), ("omega", float(omega))))

    @classmethod
    def nakagami(cls, m: float, omega: float = 1.0) -> "DistributionSpec":
        _require(m >= 0.5, f"nakagami m must be >= 0.5, got {m}")
        _require(omega > 0, f"nakagami omega must be > 0, got {omega}")
        return cls("nakagami", (("m", float(m)), ("omega", float(omega))))

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> "DistributionSpec":
        _require(sigma > 0, f"lognormal sigma must be > 0, got {sigma}")
        return cls("lognormal", (("mu", float(mu)), ("sigma", float(sigma))))

    @classmethod
    def weibull(cls, k: float, lam: float = 1.0) -> "DistributionSpec":
        _require(k > 0, f"weibull k must be > 0, got {k}")
        _require(lam > 0, f"weibull lam must be > 0, got {lam}")
        return cls("weibull", (("k", float(k)), ("lam", float(lam))))

    @classmethod
    def pareto1(cls, alpha: float, xm: float = 1.0) -> "DistributionSpec":
        _require(alpha > 0, f"pareto1 alpha must be > 0, got {alpha}")
        _require(xm > 0, f"pareto1 xm must be > 0, got {xm}")
        return cls("pareto1", (("alpha", float(alpha)), ("xm", float(xm))))

    @classmethod
    def exponential(cls, rate: float) -> "DistributionSpec":
        _require(rate > 0, f"exponential rate must be > 0, got {rate}")
        return cls("exponential", (("rate", float(rate)),))

    @classmethod
    def logpareto(cls, alpha: float, xm: float = 1.0) -> "DistributionSpec":
        _require(alpha > 0, f"logpareto alpha must be > 0, got {alpha}")
        _require(xm > 0, f"logpareto xm must be > 0, got {xm}")
        return cls("logpareto", (("alpha", float(alpha)), ("xm", float(xm))))

    @classmethod
    def constant(cls, value: float) -> "DistributionSpec":
        return cls("constant", (("value", float(value)),))

    @classmethod
    def uniform(cls, a: float, b: float) -> "DistributionSpec":
        _require(a < b, f"uniform requires a < b, got a={a}, b={b}")
        return cls("uniform", (("a", float(a)), ("b", float(b))))

    # -- helpers -----------------------------------------------------------

    def __getitem__(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)

    def to_config(self) -> dict:
        cfg = {"family": self.family}
        cfg.update({k: v for k, v in self.params})
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "DistributionSpec":
        cfg = dict(cfg)
        family = cfg.pop("family", None)
        _require(family in FAMILIES, f"unknown distribution family: {family!r}")
        ctor = getattr(cls, family)
        try:
            return ctor(**cfg)
        except TypeError as exc:
            raise ParameterError(f"bad parameters for {family}: {exc}") from exc

    def __str__(self) -> str:
        args = ", ".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.family}({args})"

    # -- sampling ----------------------------------------------------------

    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        """n i.i.d. draws; deterministic given the stream."""
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        g = stream.generator
        f = self.family
        if f == "rayleigh":
            return self["sigma"] * np.sqrt(-2.0 * np.log1p(-g.uniform(size=n)))
        if f == "rice":
            nu, s = _rice_nu_sigma(self["k"], self["omega"])
            z = g.standard_normal(size=(n, 2))
            return np.hypot(nu + s * z[:, 0], s * z[:, 1])
        if f == "nakagami":
            m, omega = self["m"], self["omega"]
            return np.sqrt(g.gamma(shape=m, scale=omega / m, size=n))
        if f == "lognormal":
            return np.exp(self["mu"] + self["sigma"] * g.standard_normal(size=n))
        if f == "weibull":
            return self["lam"] * (-np.log1p(-g.uniform(size=n))) ** (1.0 / self["k"])
        if f == "pareto1":
            return self["xm"] * (1.0 - g.uniform(size=n)) ** (-1.0 / self["alpha"])
        if f == "exponential":
            return -np.log1p(-g.uniform(size=n)) / self["rate"]
        if f == "logpareto":
            expo = self["xm"] * (1.0 - g.uniform(size=n)) ** (-1.0 / self["alpha"])
            with np.errstate(over="ignore"):  # draws beyond float range are inf
                return np.exp(expo)
        if f == "constant":
            return np.full(n, self["value"])
        if f == "uniform":
            return g.uniform(self["a"], self["b"], size=n)
        raise AssertionError(f"unreachable family {f}")

    def sample_log(self, stream: RandomStream, n: int) -> np.ndarray:
        """Draws of ln X, exact even where X itself overflows float64.

        Log-Pareto values exceed the float range routinely (its exponent is
        Pareto); callers that feed power laws into capacity formulas must go
        through this to stay finite. The same stream state is consumed as by
        `sample`, and exp(sample_log) == sample draw-for-draw where finite.
        """
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        g = stream.generator
        f = self.family
        if f == "logpareto":
            return self["xm"] * (1.0 - g.uniform(size=n)) ** (-1.0 / self["alpha"])
        if f == "lognormal":
            return self["mu"] + self["sigma"] * g.standard_normal(size=n)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.sample(stream, n))

    # -- distribution functions --------------------------------------------

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        f = self.family
        if f == "rayleigh":
            s = self["sigma"]
            return np.where(x > 0, -np.expm1(-np.square(np.maximum(x, 0)) / (2 * s * s)), 0.0)
        if f == "rice":
            nu, s = _rice_nu_sigma(self["k"], self["omega"])
            return stats.rice.cdf(x, b=nu / s, scale=s)
        if f == "nakagami":
            m, omega = self["m"], self["omega"]
            return np.where(
                x > 0, special.gammainc(m, m * np.square(np.maximum(x, 0)) / omega), 0.0
            )
        if f == "lognormal":
            mu, s = self["mu"], self["sigma"]
            with np.errstate(divide="ignore"):
                z = (np.log(np.maximum(x, 0)) - mu) / s
            return np.where(x > 0, special.ndtr(z), 0.0)
        if f == "weibull":
            k, lam = self["k"], self["lam"]
            return np.where(x > 0, -np.expm1(-((np.maximum(x, 0) / lam) ** k)), 0.0)
        if f == "pareto1":
            alpha, xm = self["alpha"], self["xm"]
            return np.where(x >= xm, 1.0 - (xm / np.maximum(x, xm)) ** alpha, 0.0)
        if f == "exponential":
            return np.where(x > 0, -np.expm1(-self["rate"] * np.maximum(x, 0)), 0.0)
        if f == "logpareto":
            alpha, xm = self["alpha"], self["xm"]
            lo = math.exp(xm)
            with np.errstate(divide="ignore"):
                lx = np.log(np.maximum(x, lo))
            return np.where(x >= lo, 1.0 - (xm / lx) ** alpha, 0.0)
        if f == "constant":
            return np.where(x >= self["value"], 1.0, 0.0)
        if f == "uniform":
            a, b = self["a"], self["b"]
            return np.clip((x - a) / (b - a), 0.0, 1.0)
        raise AssertionError(f"unreachable family {f}")

    def sf(self, x) -> np.ndarray:
        """Survival function F̄(x) = 1 - F(x), computed to full precision."""
        x = np.asarray(x, dtype=float)
        f = self.family
        if f == "rayleigh":
            s = self["sigma"]
            return np.where(x > 0, np.exp(-np.square(np.maximum(x, 0)) / (2 * s * s)), 1.0)
        if f == "weibull":
            k, lam = self["k"], self["lam"]
            return np.where(x > 0, np.exp(-((np.maximum(x, 0) / lam) ** k)), 1.0)
        if f == "pareto1":
            alpha, xm = self["alpha"], self["xm"]
            return np.where(x >= xm, (xm / np.maximum(x, xm)) ** alpha, 1.0)
        if f == "exponential":
            return np.where(x > 0, np.exp(-self["rate"] * np.maximum(x, 0)), 1.0)
        if f == "logpareto":
            alpha, xm = self["alpha"], self["xm"]
            lo = math.exp(xm)
            with np.errstate(divide="ignore"):
                lx = np.log(np.maximum(x, lo))
            return np.where(x >= lo, (xm / lx) ** alpha, 1.0)
        return 1.0 - self.cdf(x)

    def log_sf_at_log(self, log_x) -> np.ndarray:
        """ln F̄(e^u): survival on the log scale, for super-heavy laws.

        Only meaningful where exp(u) is in the support; used by the tail lab
        when products are manipulated in the log domain.
        """
        u = np.asarray(log_x, dtype=float)
        if self.family == "logpareto":
            alpha, xm = self["alpha"], self["xm"]
            return np.where(u >= xm, alpha * (math.log(xm) - np.log(np.maximum(u, xm))), 0.0)
        if self.family == "pareto1":
            alpha, xm = self["alpha"], self["xm"]
            return np.where(
                u >= math.log(xm), alpha * (math.log(xm) - u), 0.0
            )
        with np.errstate(divide="ignore"):
            return np.log(self.sf(np.exp(u)))

    def quantile(self, u) -> np.ndarray:
        """inf{x : F(x) >= u} for u in (0, 1); monotone nondecreasing."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise ParameterError("quantile requires 0 < u < 1")
        f = self.family
        if f == "rayleigh":
            return self["sigma"] * np.sqrt(-2.0 * np.log1p(-u))
        if f == "rice":
            nu, s = _rice_nu_sigma(self["k"], self["omega"])
            return stats.rice.ppf(u, b=nu / s, scale=s)
        if f == "nakagami":
            m, omega = self["m"], self["omega"]
            return np.sqrt(special.gammaincinv(m, u) * omega / m)
        if f == "lognormal":
            return np.exp(self["mu"] + self["sigma"] * special.ndtri(u))
        if f == "weibull":
            return self["lam"] * (-np.log1p(-u)) ** (1.0 / self["k"])
        if f == "pareto1":
            return self["xm"] * (1.0 - u) ** (-1.0 / self["alpha"])
        if f == "exponential":
            return -np.log1p(-u) / self["rate"]
        if f == "logpareto":
            return np.exp(self["xm"] * (1.0 - u) ** (-1.0 / self["alpha"]))
        if f == "constant":
            return np.full_like(u, self["value"])
        if f == "uniform":
            return self["a"] + (self["b"] - self["a"]) * u
        raise AssertionError(f"unreachable family {f}")

    # -- moments and tail class ---------------------------------------------

    def mean(self) -> float:
        f = self.family
        if f == "rayleigh":
            return self["sigma"] * math.sqrt(math.pi / 2.0)
        if f == "rice":
            nu, s = _rice_nu_sigma(self["k"], self["omega"])
            return float(stats.rice.mean(b=nu / s, scale=s))
        if f == "nakagami":
            m, omega = self["m"], self["omega"]
            return math.exp(special.gammaln(m + 0.5) - special.gammaln(m)) * math.sqrt(omega / m)
        if f == "lognormal":
            return math.exp(self["mu"] + 0.5 * self["sigma"] ** 2)
        if f == "weibull":
            return self["lam"] * math.gamma(1.0 + 1.0 / self["k"])
        if f == "pareto1":
            alpha, xm = self["alpha"], self["xm"]
            return alpha * xm / (alpha - 1.0) if alpha > 1.0 else math.inf
        if f == "exponential":
            return 1.0 / self["rate"]
        if f == "logpareto":
            return math.inf
        if f == "constant":
            return self["value"]
        if f == "uniform":
            return 0.5 * (self["a"] + self["b"])
        raise AssertionError(f"unreachable family {f}")

    def second_moment(self) -> float:
        f = self.family
        if f == "rayleigh":
            return 2.0 * self["sigma"] ** 2
        if f in ("rice", "nakagami"):
            return self["omega"]
        if f == "lognormal":
            return math.exp(2.0 * self["mu"] + 2.0 * self["sigma"] ** 2)
        if f == "weibull":
            return self["lam"] ** 2 * math.gamma(1.0 + 2.0 / self["k"])
        if f == "pareto1":
            alpha, xm = self["alpha"], self["xm"]
            return alpha * xm * xm / (alpha - 2.0) if alpha > 2.0 else math.inf
        if f == "exponential":
            return 2.0 / self["rate"] ** 2
        if f == "logpareto":
            return math.inf
        if f == "constant":
            return self["value"] ** 2
        if f == "uniform":
            a, b = self["a"], self["b"]
            return (a * a + a * b + b * b) / 3.0
        raise AssertionError(f"unreachable family {f}")

    def support(self) -> tuple:
        f = self.family
        if f == "pareto1":
            return (self["xm"], math.inf)
        if f == "logpareto":
            return (math.exp(self["xm"]), math.inf)
        if f == "constant":
            v = self["value"]
            return (v, v)
        if f == "uniform":
            return (self["a"], self["b"])
        return (0.0, math.inf)


def ground_truth_tail(spec: DistributionSpec) -> TailClassLabel:
    """The analytically known tail class of a spec.

    A law is light-tailed exactly when its MGF is finite on a right
    neighborhood of zero; the lognormal and sub-unit-shape Weibull keep all
    moments finite yet have no MGF; Pareto I is regularly varying with its
    own index; log-Pareto has a slowly varying survival function (no finite
    positive moments at all).
    """
    f = spec.family
    if f in ("rayleigh", "rice", "nakagami", "exponential", "constant", "uniform"):
        return TailClassLabel(TailClass.LIGHT_TAILED)
    if f == "weibull":
        if spec["k"] >= 1.0:
            return TailClassLabel(TailClass.LIGHT_TAILED)
        return TailClassLabel(TailClass.HEAVY_SUBEXPONENTIAL_ALL_MOMENTS)
    if f == "lognormal":
        return TailClassLabel(TailClass.HEAVY_SUBEXPONENTIAL_ALL_MOMENTS)
    if f == "pareto1":
        return TailClassLabel(TailClass.REGULARLY_VARYING, index=spec["alpha"])
    if f == "logpareto":
        return TailClassLabel(TailClass.SLOWLY_VARYING)
    raise AssertionError(f"unreachable family {f}")


def sample(spec: DistributionSpec, stream: RandomStream, n: int) -> np.ndarray:
    return spec.sample(stream, n)


def quantile(spec: DistributionSpec, u) -> np.ndarray:
    return spec.quantile(u)


def _rice_nu_sigma(k: float, omega: float) -> tuple:
    """Map the (K-factor, total power) pair to the underlying normal params."""
    nu = math.sqrt(omega * k / (k + 1.0))
    sigma = math.sqrt(omega / (2.0 * (k + 1.0)))
    return nu, sigma
