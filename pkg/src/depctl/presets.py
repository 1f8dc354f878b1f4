"""Named experiment presets.

Preset names are part of the CLI contract: the composition sub-cases map to
"L2-*" product/sum runs with their derived expected trend, the dependence
experiments to "sm-chain-*" / "bias-*" / "random-sum-*", the condition chain
to "chain-*", and the queueing trade to "power-trade-*".
"""

from __future__ import annotations

import copy

RAYLEIGH_UNIT = {"family": "rayleigh", "sigma": 0.7071067811865476}  # E|h|^2 = 1
DEFAULT_SEED = 20260810

_CAP_PARAMS = {"w": 1.0, "rho": 10.0, "n_t": 2, "csit": "unknown"}


def _exp(name: str, kind: str, payload: dict, seed: int = DEFAULT_SEED) -> dict:
    return {"name": name, "kind": kind, "seed": seed, "payload": payload}


def _product(name, spec1, spec2, expect, n=1_000_000, phi_alpha=0.5):
    return _exp(name, "product_sum", {
        "mode": "product", "spec1": spec1, "spec2": spec2,
        "phi_alpha": phi_alpha, "n": n, "expect_trend": expect,
    })


def _sum(name, spec1, spec2, expect, n=1_000_000):
    return _exp(name, "product_sum", {
        "mode": "sum", "spec1": spec1, "spec2": spec2, "n": n, "expect_trend": expect,
    })


PRESETS = {}


def _register(cfg: dict) -> None:
    PRESETS[cfg["name"]] = cfg


# -- composition sub-cases (long-tailed / regularly varying / power / light
#    dominating factor, against light or polynomial co-factors) -------------

_register(_sum("L2-1a", {"family": "lognormal", "mu": 0.0, "sigma": 1.0},
               {"family": "exponential", "rate": 1.0}, expect="unit"))
_register(_sum("L2-1b", {"family": "pareto1", "alpha": 1.5, "xm": 1.0},
               {"family": "pareto1", "alpha": 6.0, "xm": 1.0}, expect="unit"))
_register(_product("L2-2a", {"family": "logpareto", "alpha": 1.0, "xm": 1.0},
                   {"family": "exponential", "rate": 1.0}, expect="unit"))
_register(_product("L2-2b", {"family": "logpareto", "alpha": 1.0, "xm": 1.0},
                   {"family": "pareto1", "alpha": 2.0, "xm": 1.0}, expect="unit"))
_register(_product("L2-3a", {"family": "pareto1", "alpha": 2.0, "xm": 1.0},
                   {"family": "exponential", "rate": 1.0}, expect="bounded"))
_register(_product("L2-3b", {"family": "pareto1", "alpha": 2.0, "xm": 1.0},
                   {"family": "pareto1", "alpha": 6.0, "xm": 1.0}, expect="bounded"))
_register(_product("L2-4a", {"family": "exponential", "rate": 1.0},
                   {"family": "exponential", "rate": 1.0}, expect="diverging"))
_register(_product("L2-4b", {"family": "exponential", "rate": 1.0},
                   {"family": "pareto1", "alpha": 2.0, "xm": 1.0}, expect="diverging"))

_register(_exp("comonotone-closure-pareto2", "product_sum", {
    "mode": "comonotone_closure",
    "spec": {"family": "pareto1", "alpha": 2.0, "xm": 1.0},
    "n_terms": 2, "n": 200_000, "n_grid": 10,
}))

# -- tail probes -------------------------------------------------------------

_register(_exp("hill-pareto2", "tail", {
    "probe": "hill", "dist": {"family": "pareto1", "alpha": 2.0, "xm": 1.0},
    "n": 100_000, "k": 1000,
}))
_register(_exp("light-pareto2", "tail", {
    "probe": "light_tail", "dist": {"family": "pareto1", "alpha": 2.0, "xm": 1.0},
    "n": 200_000, "expect": "heavy",
}))
_register(_exp("light-capacity-rayleigh-2x2", "tail", {
    "probe": "light_tail",
    "capacity": {
        "model": {"n_r": 2, "n_t": 2, "entry_law": RAYLEIGH_UNIT},
        "params": _CAP_PARAMS, "power": None,
    },
    "n": 1_000_000, "expect": "light",
}))
_register(_exp("lemma-concordance", "tail", {
    "probe": "concordance", "n": 200_000,
}))

# -- capacity sampling -------------------------------------------------------

_register(_exp("capacity-rayleigh-2x2", "capacity", {
    "model": {"n_r": 2, "n_t": 2, "entry_law": RAYLEIGH_UNIT},
    "params": _CAP_PARAMS, "power": None, "n": 100_000,
}))
_register(_exp("sample-pareto2", "sample", {
    "dist": {"family": "pareto1", "alpha": 2.0, "xm": 1.0}, "n": 1000,
}))

# -- condition chain ----------------------------------------------------------

_register(_exp("chain-rayleigh-2x2", "condition_chain", {
    "model": {"n_r": 2, "n_t": 2, "entry_law": RAYLEIGH_UNIT},
    "params": _CAP_PARAMS, "power": None, "n": 100_000,
    "expect": {"0": "finite", "1": "finite", "2": "finite", "6": "finite"},
}))
_register(_exp("chain-pareto05-power", "condition_chain", {
    "model": {"n_r": 1, "n_t": 1, "entry_law": RAYLEIGH_UNIT},
    "params": {"w": 1.0, "rho": 10.0, "n_t": 1, "csit": "unknown"},
    "power": {"family": "pareto1", "alpha": 0.5, "xm": 1.0},
    "n": 100_000,
    "expect": {"0": "divergent"},
}))

# -- stochastic orders ---------------------------------------------------------

_UNIFORM = {"family": "uniform", "a": 0.0, "b": 1.0}
_EXP1 = {"family": "exponential", "rate": 1.0}

_register(_exp("sm-chain-extreme", "orders", {
    "experiment": "partial_sum",
    "lo": {"horizon": 8, "marginals": [_UNIFORM],
           "temporal_copula": {"kind": "independence", "dim": 8}},
    "hi": {"horizon": 8, "marginals": [_UNIFORM],
           "temporal_copula": {"kind": "comonotone", "dim": 8}},
    "paths": 100_000, "expect": "holds",
}))
_register(_exp("sm-chain-gauss", "orders", {
    "experiment": "partial_sum",
    "lo": {"horizon": 8, "marginals": [_EXP1],
           "temporal_copula": {"kind": "gaussian_ar1", "dim": 8, "rho": -0.8}},
    "hi": {"horizon": 8, "marginals": [_EXP1],
           "temporal_copula": {"kind": "gaussian_ar1", "dim": 8, "rho": 0.8}},
    "paths": 100_000, "expect": "holds",
}))
_register(_exp("bias-counter-uniform", "orders", {
    "experiment": "dependence_bias",
    "neg": {"horizon": 1, "marginals": [_UNIFORM, _UNIFORM],
            "spatial_copula": {"kind": "countermonotone", "dim": 2}},
    "deltas": [0.0, 0.005, 0.01, 0.02, 0.05, 0.07, 0.1],
    "paths": 100_000, "expect_min_delta_star": 0.05,
}))
_register(_exp("bias-como-uniform", "orders", {
    "experiment": "dependence_bias",
    "neg": {"horizon": 1, "marginals": [_UNIFORM, _UNIFORM],
            "spatial_copula": {"kind": "comonotone", "dim": 2}},
    "deltas": [0.0, 0.005, 0.01, 0.02, 0.05],
    "paths": 100_000, "expect_max_delta_star": 0.005,
}))
_register(_exp("random-sum-poisson", "orders", {
    "experiment": "random_sum",
    "counts_lo": {"kind": "independent", "rate": 5.0, "dim": 2},
    "counts_hi": {"kind": "comonotone", "rate": 5.0, "dim": 2},
    "increments": [_EXP1, _EXP1],
    "n": 1_000_000, "expect": "holds",
}))
_register(_exp("marginal-strength-uniform", "orders", {
    "experiment": "marginal_strength",
    "base": {"horizon": 8, "marginals": [_UNIFORM, _UNIFORM],
             "temporal_copula": {"kind": "gaussian_ar1", "dim": 8, "rho": 0.6}},
    "shift_locs": [0.2, 0.2],
    "paths": 50_000, "expect": "holds",
}))
_register(_exp("block-sums-disjoint", "orders", {
    "experiment": "block_sum",
    "lo": {"horizon": 8, "marginals": [_UNIFORM],
           "temporal_copula": {"kind": "gaussian_ar1", "dim": 8, "rho": 0.0}},
    "hi": {"horizon": 8, "marginals": [_UNIFORM],
           "temporal_copula": {"kind": "gaussian_ar1", "dim": 8, "rho": 0.7}},
    "windows": [[0, 1, 2, 3], [4, 5, 6, 7]],
    "paths": 100_000, "expect": "holds",
}))

# -- queueing -------------------------------------------------------------------

_QUEUE_MODEL = {"n_r": 1, "n_t": 1, "entry_law": RAYLEIGH_UNIT}
_QUEUE_PARAMS = {"w": 1.0, "rho": 10.0, "n_t": 1, "csit": "unknown"}

_register(_exp("queue-md1", "queue", {
    "mode": "backlog",
    "config": {
        "arrival": {"horizon": 512, "marginals": [{"family": "exponential", "rate": 1.25}]},
        "service": {"kind": "process", "horizon": 512,
                    "marginals": [{"family": "constant", "value": 1.0}]},
        "horizon": 512, "paths": 400,
    },
}))


def _trade_payload(rho_neg: float) -> dict:
    return {
        "mode": "power_trade",
        "load": 0.8, "q": 0.99, "tolerance": 0.05,
        "horizon": 512, "paths": 512,
        "model": _QUEUE_MODEL, "params": _QUEUE_PARAMS,
        "service_rho_neg": rho_neg, "service_rho_ref": 0.0,
    }


_register(_exp("power-trade-ar1", "queue",
               dict(_trade_payload(-0.6), expect_saving_positive=True)))
_register(_exp("power-trade-symmetric", "queue",
               dict(_trade_payload(0.0), expect_saving_zero=True)))


def get_preset(name: str) -> dict:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}")
    return copy.deepcopy(PRESETS[name])


def preset_names() -> list:
    return sorted(PRESETS)
