"""Config-driven experiment execution and result persistence.

Every experiment is a JSON config (validated against EXPERIMENT_SCHEMA)
that runs deterministically from its seed: outputs are CSV files (17
significant digits, LF endings) plus a JSON report, tied together by a
run manifest carrying the config hash. Re-running a config reproduces the
numeric CSV content byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, channel, orders, queueing, tail_lab
from .channel import CapacityParams, ChannelModel
from .dependence import CopulaSpec, MarginalShift, ProcessSpec, sm_pair
from .distributions import DistributionSpec
from .presets import RAYLEIGH_UNIT
from .queueing import ChannelService, QueueConfig
from .streams import RandomStream

KINDS = ("sample", "capacity", "tail", "product_sum", "orders", "queue", "condition_chain")

EXPERIMENT_SCHEMA = {
    "type": "object",
    "required": ["name", "kind", "seed", "payload"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "threads": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "payload": {"type": "object"},
    },
}


class ConfigError(ValueError):
    """The experiment config violates the schema or references unknowns."""


def validate_config(config: dict) -> dict:
    try:
        jsonschema.validate(config, EXPERIMENT_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {path!r}: {exc.message}") from exc
    return config


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# payload parsing helpers


def _dist(cfg) -> DistributionSpec:
    return DistributionSpec.from_config(cfg)


def _capacity_draws(payload: dict, stream: RandomStream, n: int, threads: int):
    model = ChannelModel.from_config(payload["model"])
    params = CapacityParams.from_config(payload["params"])
    power = _dist(payload["power"]) if payload.get("power") else None
    return channel.sample_capacity(model, power, params, stream, n, threads=threads)


_CONCORDANCE_ZOO = (
    ("rayleigh-2x2-const", {"n_r": 2, "n_t": 2, "entry_law": RAYLEIGH_UNIT}, None),
    ("rayleigh-1x1-pareto05", {"n_r": 1, "n_t": 1, "entry_law": RAYLEIGH_UNIT},
     {"family": "pareto1", "alpha": 0.5, "xm": 1.0}),
    ("rice-2x2-const", {"n_r": 2, "n_t": 2,
                        "entry_law": {"family": "rice", "k": 3.0, "omega": 1.0}}, None),
    ("nakagami-2x2-exp", {"n_r": 2, "n_t": 2,
                          "entry_law": {"family": "nakagami", "m": 2.0, "omega": 1.0}},
     {"family": "exponential", "rate": 1.0}),
    ("lognormal-1x1-const", {"n_r": 1, "n_t": 1,
                             "entry_law": {"family": "lognormal", "mu": 0.0, "sigma": 1.0}},
     None),
    ("weibull-1x1-uniform", {"n_r": 1, "n_t": 1,
                             "entry_law": {"family": "weibull", "k": 0.8, "lam": 1.0}},
     {"family": "uniform", "a": 0.5, "b": 1.5}),
    ("rayleigh-3x2-pareto2", {"n_r": 3, "n_t": 2, "entry_law": RAYLEIGH_UNIT},
     {"family": "pareto1", "alpha": 2.0, "xm": 1.0}),
    ("uniform-2x2-lognormal", {"n_r": 2, "n_t": 2,
                               "entry_law": {"family": "uniform", "a": 0.0, "b": 1.0}},
     {"family": "lognormal", "mu": 0.0, "sigma": 1.0}),
    ("rayleigh-1x1-logpareto", {"n_r": 1, "n_t": 1, "entry_law": RAYLEIGH_UNIT},
     {"family": "logpareto", "alpha": 1.0, "xm": 1.0}),
    ("uniform-1x1-logpareto", {"n_r": 1, "n_t": 1,
                               "entry_law": {"family": "uniform", "a": 0.0, "b": 1.0}},
     {"family": "logpareto", "alpha": 0.5, "xm": 1.0}),
)


def concordance_configs():
    """The channel/power zoo for the tail-equivalence concordance check."""
    out = []
    for label, model_cfg, power_cfg in _CONCORDANCE_ZOO:
        model = ChannelModel.from_config(dict(model_cfg))
        power = _dist(power_cfg) if power_cfg else None
        n_t = model.n_t
        out.append((label, model, power, CapacityParams(w=1.0, rho=10.0, n_t=n_t)))
    return out


# ---------------------------------------------------------------------------
# per-kind runners: each returns (verdict: str, summary: dict, outputs)


def _run_sample(payload, stream, out_dir, threads):
    spec = _dist(payload["dist"])
    draws = spec.sample(stream, payload["n"])
    path = out_dir / "samples.csv"
    write_csv(path, ["index", "value"], enumerate(draws))
    return "completed", {"n": draws.size, "mean": float(np.mean(draws))}, [path]


def _run_capacity(payload, stream, out_dir, threads):
    draws = _capacity_draws(payload, stream, payload["n"], threads)
    path = out_dir / "capacity.csv"
    write_csv(
        path,
        ["index", "c_bits_per_s", "lambda_max", "trace", "power"],
        zip(range(len(draws)), draws.c, draws.lambda_max, draws.trace, draws.power),
    )
    return "completed", {
        "n": len(draws),
        "mean_c": float(np.mean(draws.c)),
        "max_c": float(np.max(draws.c)),
    }, [path]


def _run_tail(payload, stream, out_dir, threads):
    probe = payload["probe"]
    outputs = []
    if probe == "concordance":
        rows = tail_lab.capacity_concordance_experiment(
            concordance_configs(), stream, payload["n"], threads=threads
        )
        all_ok = all(r.concordant for r in rows)
        table = [
            (r.label, r.capacity_verdict, r.lambda_power_bounded, r.trace_power_bounded,
             r.concordant)
            for r in rows
        ]
        path = out_dir / "concordance.csv"
        write_csv(path, ["config", "capacity_verdict", "lambda_bounded", "trace_bounded",
                         "concordant"], table)
        return ("holds" if all_ok else "fails"), {
            "configs": len(rows), "concordant": sum(r.concordant for r in rows),
        }, [path]

    if payload.get("capacity"):
        draws = _capacity_draws(payload["capacity"], stream.derive("capacity"),
                                payload["n"], threads)
        samples = draws.c
    else:
        samples = _dist(payload["dist"]).sample(stream.derive("dist"), payload["n"])
    tail = tail_lab.EmpiricalTail.from_samples(samples)

    if probe == "light_tail":
        report = tail_lab.light_tail_test(tail)
        summary = {
            "verdict": report.verdict, "slope_x": report.slope_x, "r2_x": report.r2_x,
            "r2_logx": report.r2_logx, "mgf_stable": report.mgf.exists_stable(),
        }
        verdict = "completed"
        if "expect" in payload:
            verdict = "holds" if report.verdict == payload["expect"] else "fails"
        path = out_dir / "light_tail.json"
        write_json(path, summary)
        return verdict, summary, [path]
    if probe == "hill":
        estimate = tail_lab.hill(tail, payload["k"])
        summary = {"alpha_hat": estimate, "k": payload["k"]}
        path = out_dir / "hill.json"
        write_json(path, summary)
        return "completed", summary, [path]
    if probe == "mgf":
        grid = payload.get("theta_grid")
        pr = tail_lab.mgf_probe(tail, grid)
        path = out_dir / "mgf.csv"
        write_csv(path, ["theta", "estimate", "stable", "growth"],
                  zip(pr.theta_grid, pr.estimates, pr.stable, pr.growth))
        return "completed", {"stable_anywhere": pr.exists_stable()}, [path]
    if probe == "left_tail":
        rep = tail_lab.left_tail_probe(tail, payload["theta"])
        path = out_dir / "left_tail.json"
        write_json(path, {"verdict": rep["verdict"], "theta": payload["theta"]})
        return "completed", {"verdict": rep["verdict"]}, [path]
    raise ConfigError(f"unknown tail probe {probe!r}")


def _ratio_outputs(report, out_dir, name):
    curve = report.curve
    path = out_dir / f"{name}.csv"
    write_csv(
        path,
        ["x", "ratio", "ci_halfwidth", "dominant_mass", "clipped_mass"],
        zip(report.grid, curve.ratio, curve.ci_halfwidth,
            report.dominant_mass, report.clipped_mass),
    )
    jpath = out_dir / f"{name}.json"
    write_json(jpath, {
        "experiment": name, "grid": report.grid, "ratios": curve.ratio,
        "ci": curve.ci_halfwidth, "trend": curve.trend, "slope": curve.slope,
        "slope_se": curve.slope_se, "asymptote": curve.asymptote,
    })
    return [path, jpath]


def _run_product_sum(payload, stream, out_dir, threads):
    mode = payload["mode"]
    if mode == "comonotone_closure":
        rep = tail_lab.comonotone_closure_experiment(
            _dist(payload["spec"]), payload["n_terms"], stream, payload["n"],
            n_grid=payload.get("n_grid", 10),
        )
        path = out_dir / "comonotone_closure.csv"
        rows = [("sum", x, r, c) for x, r, c in zip(rep.grid_sum, rep.sum_ratio, rep.sum_ci)]
        rows += [("product", x, r, c)
                 for x, r, c in zip(rep.grid_prod, rep.prod_ratio, rep.prod_ci)]
        write_csv(path, ["curve", "x", "ratio", "ci_halfwidth"], rows)
        ok = rep.sum_ok and rep.product_ok
        return ("holds" if ok else "fails"), {
            "sum_ok": rep.sum_ok, "product_ok": rep.product_ok,
        }, [path]
    spec1, spec2 = _dist(payload["spec1"]), _dist(payload["spec2"])
    if mode == "product":
        rep = tail_lab.product_tail_experiment(
            spec1, spec2, payload.get("phi_alpha", 0.5), stream, payload["n"]
        )
    elif mode == "sum":
        rep = tail_lab.sum_tail_experiment(spec1, spec2, stream, payload["n"])
    else:
        raise ConfigError(f"unknown product_sum mode {mode!r}")
    outputs = _ratio_outputs(rep, out_dir, mode)
    summary = {"trend": rep.curve.trend, "slope": rep.curve.slope,
               "asymptote": rep.curve.asymptote}
    verdict = "completed"
    if "expect_trend" in payload:
        want = payload["expect_trend"]
        got = rep.curve.trend
        matched = got == want or (want == "bounded" and got == "unit")
        verdict = "holds" if matched else "fails"
    return verdict, summary, outputs


def _orders_curve_outputs(report, out_dir):
    path = out_dir / "stop_loss.csv"
    write_csv(
        path,
        ["t", "pi_lo", "ci_lo", "pi_hi", "ci_hi"],
        zip(report.curve_lo.t_grid, report.curve_lo.pi, report.curve_lo.ci_halfwidth,
            report.curve_hi.pi, report.curve_hi.ci_halfwidth),
    )
    return [path]


def _run_orders(payload, stream, out_dir, threads):
    experiment = payload["experiment"]
    if experiment == "partial_sum":
        pair = sm_pair(ProcessSpec.from_config(payload["lo"]),
                       ProcessSpec.from_config(payload["hi"]))
        rep = orders.partial_sum_order_experiment(
            pair, payload.get("weights"), stream, payload["paths"]
        )
        outputs = _orders_curve_outputs(rep, out_dir)
        v = rep.verdict
        summary = {"outcome": v.outcome, "margin": v.margin,
                   "mean_z": v.detail.get("mean_z")}
    elif experiment == "dependence_bias":
        rep = orders.dependence_bias_experiment(
            ProcessSpec.from_config(payload["neg"]), payload["deltas"], stream,
            payload["paths"],
        )
        path = out_dir / "bias.csv"
        write_csv(path, ["delta", "margin", "outcome"],
                  zip(rep.deltas, rep.margins, rep.outcomes))
        outputs = [path]
        summary = {"delta_star": rep.delta_star, "outcomes": rep.outcomes}
        verdict = "completed"
        if "expect_min_delta_star" in payload:
            verdict = ("holds" if rep.delta_star >= payload["expect_min_delta_star"]
                       else "fails")
        if "expect_max_delta_star" in payload:
            verdict = ("holds" if rep.delta_star <= payload["expect_max_delta_star"]
                       else "fails")
        write_json(out_dir / "bias.json", summary)
        return verdict, summary, outputs + [out_dir / "bias.json"]
    elif experiment == "random_sum":
        v = orders.random_sum_experiment(
            orders.CountsSpec(**payload["counts_lo"]),
            orders.CountsSpec(**payload["counts_hi"]),
            [_dist(c) for c in payload["increments"]],
            stream, payload["n"], spread_step=payload.get("spread_step", 0.0),
        )
        summary = {"outcome": v.outcome, "margin": v.margin, "checks": v.detail}
        outputs = []
    elif experiment == "marginal_strength":
        verdicts = orders.marginal_strength_experiment(
            ProcessSpec.from_config(payload["base"]),
            [MarginalShift(loc=d) for d in payload["shift_locs"]],
            stream, payload["paths"],
        )
        worst = max(v.margin for v in verdicts)
        outcome = ("holds" if all(v.outcome == "holds" for v in verdicts)
                   else "fails" if any(v.outcome == "fails" for v in verdicts)
                   else "inconclusive")
        summary = {"outcome": outcome, "margin": worst,
                   "pairs": [[*v.detail["pair"], v.outcome] for v in verdicts]}
        v = orders.OrderVerdict("icx", outcome, worst)
        outputs = []
    elif experiment == "block_sum":
        pair = sm_pair(ProcessSpec.from_config(payload["lo"]),
                       ProcessSpec.from_config(payload["hi"]))
        verdicts = orders.block_sum_order_experiment(
            pair, payload["windows"], stream, payload["paths"]
        )
        worst = max(v.margin for v in verdicts)
        outcome = ("holds" if all(v.outcome == "holds" for v in verdicts)
                   else "fails" if any(v.outcome == "fails" for v in verdicts)
                   else "inconclusive")
        summary = {"outcome": outcome, "margin": worst}
        v = orders.OrderVerdict("icx", outcome, worst)
        outputs = []
    else:
        raise ConfigError(f"unknown orders experiment {experiment!r}")

    verdict = summary["outcome"]
    if "expect" in payload:
        verdict = "holds" if summary["outcome"] == payload["expect"] else "fails"
    write_json(out_dir / "verdict.json", summary)
    return verdict, summary, outputs + [out_dir / "verdict.json"]


def _trade_configs(payload, stream):
    """Build the negative/reference queue configs for a power-trade payload."""
    model = ChannelModel.from_config(payload["model"])
    params = CapacityParams.from_config(payload["params"])
    horizon, paths = payload["horizon"], payload["paths"]

    def svc(rho):
        return ChannelService(
            model, params, power_scale=1.0,
            gain_copula=CopulaSpec.gaussian_ar1(rho, horizon),
        )

    # calibrate the arrival rate at the requested load on a fixed pilot run
    pilot = QueueConfig(
        ProcessSpec(horizon, [DistributionSpec.constant(0.0)]), svc(0.0), horizon, 200
    )
    _, service = queueing.generate_queue_inputs(pilot, RandomStream(0xCA11B, "load-pilot"))
    rate = 1.0 / (payload["load"] * float(np.mean(service)))
    arrival = ProcessSpec(horizon, [DistributionSpec.exponential(rate)])

    neg = QueueConfig(arrival, svc(payload["service_rho_neg"]), horizon, paths)
    ref = QueueConfig(arrival, svc(payload["service_rho_ref"]), horizon, paths)
    return neg, ref


def _run_queue(payload, stream, out_dir, threads):
    if payload["mode"] == "backlog":
        cfg = QueueConfig.from_config(payload["config"])
        st = queueing.backlog_stats(cfg, stream)
        path = out_dir / "exceedance.csv"
        write_csv(path, ["x", "p", "ci_lo", "ci_hi"],
                  zip(st.exceedance_x, st.exceedance_p,
                      st.exceedance_ci[:, 0], st.exceedance_ci[:, 1]))
        summary = {
            "quantiles": st.quantiles, "load": st.load,
            "unstable_load": st.unstable_load, "nonstationary": st.nonstationary,
        }
        write_json(out_dir / "backlog.json", summary)
        return "completed", summary, [path, out_dir / "backlog.json"]
    if payload["mode"] == "power_trade":
        neg, ref = _trade_configs(payload, stream)
        rep = queueing.power_tradeoff(neg, ref, payload["q"], payload["tolerance"], stream)
        summary = {
            "kappa_base": rep.kappa_base, "kappa_star": rep.kappa_star,
            "saving": rep.saving, "advantage_z": rep.advantage_z,
            "no_crossing": rep.no_crossing, "target_quantile": rep.target_quantile,
        }
        verdict = "completed"
        if payload.get("expect_saving_positive"):
            verdict = "holds" if rep.saving > 0 and rep.advantage_z > 2.0 else "fails"
        if payload.get("expect_saving_zero"):
            verdict = "holds" if abs(rep.advantage_z) <= 2.0 else "fails"
        write_json(out_dir / "power_trade.json", summary)
        return verdict, summary, [out_dir / "power_trade.json"]
    raise ConfigError(f"unknown queue mode {payload['mode']!r}")


def _run_condition_chain(payload, stream, out_dir, threads):
    model = ChannelModel.from_config(payload["model"])
    params = CapacityParams.from_config(payload["params"])
    power = _dist(payload["power"]) if payload.get("power") else None
    rep = tail_lab.condition_chain_eval(model, power, params, stream, payload["n"],
                                        threads=threads)
    summary = {
        "condition_values": {str(k): v for k, v in rep.condition_values.items()},
        "dag_consistent": rep.dag_consistent,
        "theta_witness": {str(k): v for k, v in rep.theta_witness.items()},
        "violated_edges": rep.violated_edges,
    }
    verdict = "holds" if rep.dag_consistent else "fails"
    for cid, want in payload.get("expect", {}).items():
        if summary["condition_values"][str(cid)] != want:
            verdict = "fails"
    write_json(out_dir / "condition_report.json", summary)
    return verdict, summary, [out_dir / "condition_report.json"]


_RUNNERS = {
    "sample": _run_sample,
    "capacity": _run_capacity,
    "tail": _run_tail,
    "product_sum": _run_product_sum,
    "orders": _run_orders,
    "queue": _run_queue,
    "condition_chain": _run_condition_chain,
}


def run_experiment(config: dict, out_root, threads: int = 1) -> dict:
    """Run a validated config; returns the manifest (also written to disk).

    Exit-code contract: 0 completed/holds, 2 fails-type verdicts (the caller
    maps errors to 1).
    """
    validate_config(config)
    name = config["name"]
    out_dir = Path(out_root) / name
    out_dir.mkdir(parents=True, exist_ok=True)
    stream = RandomStream(config["seed"], f"exp/{name}")
    started = datetime.now(timezone.utc).isoformat()
    verdict, summary, outputs = _RUNNERS[config["kind"]](
        config["payload"], stream, out_dir, threads
    )
    finished = datetime.now(timezone.utc).isoformat()
    manifest = {
        "name": name,
        "kind": config["kind"],
        "config_hash": config_hash(config),
        "artifact_version": __version__,
        "started": started,
        "finished": finished,
        "outputs": [str(p) for p in outputs],
        "verdict": verdict,
        "summary": summary,
        "exit_code": 0 if verdict in ("completed", "holds") else 2,
    }
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def report_rows(manifest_paths) -> list:
    """One (name, verdict, key statistic, ci) row per manifest, name-sorted."""
    rows = []
    for mp in manifest_paths:
        path = Path(mp)
        if not path.exists():
            raise FileNotFoundError(f"manifest not found: {path}")
        with open(path, encoding="utf-8") as fh:
            m = json.load(fh)
        for out in m.get("outputs", []):
            if not Path(out).exists():
                raise FileNotFoundError(f"manifest {path} references missing output {out}")
        stat, ci = _key_statistic(m)
        rows.append((m["name"], m["verdict"], stat, ci))
    rows.sort(key=lambda r: r[0])
    return rows


def _key_statistic(manifest: dict):
    s = manifest.get("summary", {})
    if "trend" in s:
        return f"trend={s['trend']}", f"asymptote={_fmt(s.get('asymptote', math.nan))}"
    for key in ("margin", "delta_star", "saving", "alpha_hat", "mean_c", "mean"):
        if key in s and s[key] is not None:
            return f"{key}={_fmt(s[key])}", ""
    if "verdict" in s:
        return f"verdict={s['verdict']}", ""
    if "quantiles" in s:
        q = s["quantiles"]
        key = "0.99" if "0.99" in q else list(q)[-1]
        return f"q99={_fmt(q[key])}", ""
    if "condition_values" in s:
        return "dag=" + str(s["dag_consistent"]), ""
    return manifest["verdict"], ""
