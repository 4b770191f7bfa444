"""Command-line experiment runner.

    csitlab <subcommand> [config.json] [--key value ...] [--seed N] [--trials N] [--out DIR]

Each run writes ``<out>/<subcommand>.csv`` (sweep points, deterministic
given config and seed) and ``<out>/<subcommand>.json`` (config echo,
summary, timestamps).  Keys may be dotted paths into the config
(``--wideband.T 8``) or bare field names of the subcommand's block
(``--T 8``).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import equivalence as eq
from . import oracles, ppm, wideband
from .channel import CsitQuality, ExponentialTail, PolynomialTail, Rayleigh
from .dmc import capacity_per_unit_cost, channel_from_dict, load_channel
from .errors import CapExceeded, DomainError, InfeasibleError
from .results import ResultRecord, emit_plotdata
from .stats import Proportion


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"field '{path}': {message}")
        self.path = path


# ------------------------------------------------------------------- config


@dataclass
class WidebandConfig:
    w: list = field(default_factory=lambda: [100])
    T: int = 4
    P: float = 1.0
    epsilon: float = 0.01
    K: int | None = None
    lam: float | None = None
    beta: float = 1.0
    tail: str = "rayleigh"
    tail_mean: float = 1.0
    tail_exponent: float = 2.0
    explicit: bool = False
    workers: int = 1


@dataclass
class RateConfig:
    sweep_w: str = "1e4:1e12"
    per_decade: int = 1
    T: int = 4
    P: float = 1.0
    epsilon: float = 0.01
    beta: float = 1.0
    tail_mean: float = 2.0
    tail_exponent: float = 2.0


@dataclass
class PpmConfig:
    n: list = field(default_factory=lambda: [50, 100, 200])
    u: object = None
    delta: float = 0.05
    M: int | None = None
    mode: str = "auto"


@dataclass
class EquivalenceConfig:
    grid_resolution: int = 40


@dataclass
class ExperimentConfig:
    channel: object = None
    wideband: WidebandConfig = field(default_factory=WidebandConfig)
    rate: RateConfig = field(default_factory=RateConfig)
    ppm: PpmConfig = field(default_factory=PpmConfig)
    equivalence: EquivalenceConfig = field(default_factory=EquivalenceConfig)
    seed: int = 0
    trials: int | None = None
    out: str = "results"


_BLOCK = {
    "wideband-sim": "wideband",
    "wideband-rate": "rate",
    "ppm-sim": "ppm",
    "equivalence": "equivalence",
}
_ALIASES = {"eps": "epsilon", "sweep-w": "sweep_w"}
_DEFAULT_TRIALS = {"wideband-sim": 100_000, "ppm-sim": 10_000, "oracle": 100_000}


def _merge(obj, doc: dict, prefix: str = ""):
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in doc.items():
        path = prefix + key
        if key not in names:
            raise ConfigError(path, "unknown field")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected an object")
            _merge(current, value, path + ".")
        else:
            setattr(obj, key, value)


def _set_path(cfg: ExperimentConfig, path: str, value):
    parts = path.split(".")
    doc = value
    for p in reversed(parts):
        doc = {p: doc}
    _merge(cfg, doc)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        if "," in text:
            return [_parse_value(t) for t in text.split(",")]
        return text


def load_config(command: str, path, overrides: list[str]) -> tuple[ExperimentConfig, Path | None]:
    cfg = ExperimentConfig()
    base = None
    if path is not None:
        base = Path(path)
        try:
            doc = json.loads(base.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(str(path), "top level must be an object")
        if "states" in doc:  # a bare channel spec
            doc = {"channel": str(base)}
        elif isinstance(doc.get("channel"), str):
            doc["channel"] = str((base.parent / doc["channel"]))
        _merge(cfg, doc)
    if len(overrides) % 2:
        raise ConfigError(overrides[-1].lstrip("-"), "missing value")
    block = _BLOCK.get(command)
    for flag, text in zip(overrides[::2], overrides[1::2]):
        if not flag.startswith("--"):
            raise ConfigError(flag, "expected --key value")
        key = _ALIASES.get(flag[2:], flag[2:].replace("-", "_"))
        if "." not in key and key not in {f.name for f in dataclasses.fields(cfg)}:
            if block is None:
                raise ConfigError(key, "unknown field")
            key = f"{block}.{key}"
        _set_path(cfg, key, _parse_value(text))
    return cfg, base


def _channel(cfg: ExperimentConfig):
    if cfg.channel is None:
        raise ConfigError("channel", "a channel spec is required")
    try:
        if isinstance(cfg.channel, dict):
            return channel_from_dict(cfg.channel)
        return load_channel(cfg.channel)
    except FileNotFoundError as exc:
        raise ConfigError("channel", f"no such file {cfg.channel}") from exc
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from exc


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _tail(c) -> object:
    if c.tail == "rayleigh":
        return Rayleigh()
    if c.tail == "exponential":
        return ExponentialTail(float(c.tail_mean))
    if c.tail == "polynomial":
        return PolynomialTail(float(c.tail_exponent))
    raise ConfigError("wideband.tail", f"expected rayleigh, exponential or polynomial, got {c.tail!r}")


def parse_sweep(text: str, per_decade: int = 1) -> list[int]:
    """'1e4:1e12' -> powers of ten (``per_decade`` points per decade)."""
    try:
        lo, hi = (float(t) for t in str(text).split(":"))
    except ValueError as exc:
        raise ConfigError("rate.sweep_w", f"expected LO:HI, got {text!r}") from exc
    if not 2 <= lo <= hi:
        raise ConfigError("rate.sweep_w", "need 2 <= LO <= HI")
    steps = round(math.log10(hi / lo) * per_decade)
    return [int(round(v)) for v in np.geomspace(lo, hi, steps + 1)]


# -------------------------------------------------------------- subcommands


def _ci(p: Proportion):
    return p.value, p.wilson()


def run_wideband_sim(cfg: ExperimentConfig):
    c = cfg.wideband
    tail = _tail(c)
    records, summary = [], []
    for w in _as_list(c.w):
        params = wideband.WidebandParams(
            w=int(w), T=int(c.T), P=float(c.P), epsilon=float(c.epsilon), K=c.K, lam=c.lam,
            tail=tail, csit=CsitQuality(float(c.beta)),
        )
        est = wideband.simulate_trials(params, cfg.trials, cfg.seed, explicit=bool(c.explicit), workers=int(c.workers))
        a = wideband.alpha_for_energy(params.w, params.lam)
        bound = wideband.type2_bound(params, a) if a > 0 else math.nan
        p1, ci1 = _ci(est.p_type1)
        p2, ci2 = _ci(est.p_type2)
        records.append(ResultRecord(
            point={"w": params.w, "T": params.T, "lam": float(params.lam), "trials": cfg.trials, "seed": cfg.seed},
            metrics={
                "p_type1": p1,
                "p_type1_exact": wideband.type1_prob_exact(params.w),
                "p_type2": p2,
                "p_type2_bound": bound,
            },
            intervals={"p_type1": ci1, "p_type2": ci2},
        ))
        summary.append({"w": params.w, "p_type1": p1, "p_type2": p2})
    return records, {"points": summary}


def run_wideband_rate(cfg: ExperimentConfig):
    c = cfg.rate
    records, ratios = [], []
    for w in parse_sweep(c.sweep_w, int(c.per_decade)):
        params = wideband.WidebandParams(
            w=w, T=int(c.T), P=float(c.P), epsilon=float(c.epsilon), csit=CsitQuality(float(c.beta))
        )
        try:
            a = wideband.alpha_star(params)
            rep = wideband.achievable_rate(params)
            total, per_piece, ratio = rep.total, rep.per_piece, rep.ratio
        except InfeasibleError:
            a = total = per_piece = ratio = math.nan
        ref = params.csit.beta * Rayleigh().capacity_ref(params.P, params.bandwidth)
        records.append(ResultRecord(
            point={"w": w, "K": params.K, "W": params.bandwidth},
            metrics={
                "alpha_star": a,
                "rate_per_piece": per_piece,
                "rate_total": total,
                "capacity_ref": ref,
                "ratio": ratio,
                "capacity_ref_exponential": ExponentialTail(float(c.tail_mean)).capacity_ref(params.P, params.bandwidth),
                "capacity_ref_polynomial": PolynomialTail(float(c.tail_exponent)).capacity_ref(params.P, params.bandwidth),
            },
            nats=("rate_per_piece", "rate_total", "capacity_ref"),
        ))
        ratios.append(ratio)
    finite = [r for r in ratios if not math.isnan(r)]
    return records, {"ratios": ratios, "monotone": all(b > a for a, b in zip(finite, finite[1:]))}


def run_dmc_capacity(cfg: ExperimentConfig):
    chan = _channel(cfg)
    res = capacity_per_unit_cost(chan)
    label = chan.label(res.argmax)
    rec = ResultRecord(
        point={"argmax": label},
        metrics={"capacity_per_cost": res.value, "divergence": res.divergence, "cost": res.cost},
        nats=("capacity_per_cost", "divergence"),
    )
    return [rec], {"value": res.value, "value_bits": res.value / math.log(2.0), "argmax": label}


def _ppm_mapping(chan, u):
    if u is None:
        return capacity_per_unit_cost(chan).argmax
    try:
        return chan.parse_mapping(u)
    except ValueError as exc:
        raise ConfigError("ppm.u", str(exc)) from exc


def run_ppm_sim(cfg: ExperimentConfig):
    chan = _channel(cfg)
    c = cfg.ppm
    u = _ppm_mapping(chan, c.u)
    records, summary = [], []
    for n in _as_list(c.n):
        n = int(n)
        M = int(c.M) if c.M is not None else ppm.operating_point_messages(chan, u, n, float(c.delta))
        params = ppm.PpmCodeParams(n=n, M=M, delta=float(c.delta), u=u)
        est = ppm.ppm_simulate(chan, params, cfg.trials, cfg.seed, mode=c.mode)
        phi = ppm.decoding_threshold(chan, params)
        try:
            q = ppm.crossing_probability(chan, params)
        except CapExceeded:
            q = math.nan
        metrics, intervals = {}, {}
        err = est.error
        metrics["error"], intervals["error"] = _ci(err)
        for o in ppm.PpmOutcome:
            name = "p_" + o.value
            metrics[name], intervals[name] = _ci(est.rate(o))
        metrics["wrong_crossing_prob"] = q
        metrics["sanov_reference"] = math.exp(-n * phi)
        records.append(ResultRecord(
            point={"n": n, "M": M, "delta": float(c.delta), "u": chan.label(u), "trials": cfg.trials, "seed": cfg.seed},
            metrics=metrics,
            intervals=intervals,
        ))
        summary.append({"n": n, "M": M, "error": err.value})
    return records, {"points": summary}


def run_equivalence(cfg: ExperimentConfig):
    chan = _channel(cfg)
    rep = eq.equivalence_check(chan, int(cfg.equivalence.grid_resolution))
    p_hat = ";".join(repr(float(x)) for x in rep.p_hat_star)
    rec = ResultRecord(
        point={"verdict": rep.verdict.value, "u_star": chan.label(rep.u_star), "p_hat_star": p_hat},
        metrics={
            "mu": rep.mu,
            "noncausal_value": rep.noncausal_value,
            "causal_value": rep.causal_value,
            "scheme_value": rep.scheme_value,
            "tolerance": rep.tolerance,
        },
        nats=("noncausal_value", "causal_value", "scheme_value"),
    )
    return [rec], {
        "verdict": rep.verdict.value,
        "mu": rep.mu,
        "p_hat_star": list(rep.p_hat_star),
        "u_star": chan.label(rep.u_star),
        "noncausal_value": rep.noncausal_value,
        "causal_value": rep.causal_value,
    }


def _check(name, exact, p: Proportion, k=3.0):
    sigma = math.sqrt(max(exact * (1.0 - exact), 0.0) / p.trials)
    dist = abs(p.value - exact) / sigma if sigma > 0 else (0.0 if p.value == exact else math.inf)
    return ResultRecord(
        point={"check": name},
        metrics={"oracle": exact, "simulated": p.value, "sigmas": dist, "agree": dist <= k},
    )


def run_oracle(cfg: ExperimentConfig):
    chan = _channel(cfg)
    records = []
    u = capacity_per_unit_cost(chan).argmax
    params = ppm.PpmCodeParams(n=4, M=2, delta=0.05, u=u)
    exact = oracles.exact_ppm_error(chan, params)
    est = ppm.ppm_simulate(chan, params, cfg.trials, cfg.seed, mode="explicit")
    for o in ppm.PpmOutcome:
        records.append(_check(f"ppm_n4_M2_{o.value}", exact.probability(o), est.rate(o)))
    for w, T, lam in ((12, 4, 50.0), (8, 3, 3.0)):
        p1, p2 = oracles.wideband_small_exact(w, T, lam)
        sim = wideband.simulate_trials(wideband.WidebandParams(w=w, T=T, lam=lam), cfg.trials, cfg.seed)
        records.append(_check(f"wideband_w{w}_T{T}_type1", p1, sim.p_type1))
        records.append(_check(f"wideband_w{w}_T{T}_type2", p2, sim.p_type2))
    slope = oracles.ba_cost_slope(chan)
    value = capacity_per_unit_cost(chan).value
    rel = abs(slope.slope - value) / value if value else math.nan
    records.append(ResultRecord(
        point={"check": "ba_cost_slope"},
        metrics={"oracle": slope.slope, "simulated": value, "sigmas": None, "agree": rel <= 0.05},
    ))
    agree = all(r.metrics["agree"] for r in records)
    return records, {"all_agree": agree, "failed": [r.point["check"] for r in records if not r.metrics["agree"]]}


COMMANDS = {
    "wideband-sim": run_wideband_sim,
    "wideband-rate": run_wideband_rate,
    "dmc-capacity": run_dmc_capacity,
    "ppm-sim": run_ppm_sim,
    "equivalence": run_equivalence,
    "oracle": run_oracle,
}


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def run(command: str, config=None, overrides=(), seed=None, trials=None, out=None) -> int:
    """Run one subcommand; returns the process exit status."""
    cfg, _ = load_config(command, config, list(overrides))
    if seed is not None:
        cfg.seed = seed
    if trials is not None:
        cfg.trials = trials
    if out is not None:
        cfg.out = out
    if cfg.trials is None:
        cfg.trials = _DEFAULT_TRIALS.get(command, 0)
    cfg.trials, cfg.seed = int(cfg.trials), int(cfg.seed)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    records, summary = COMMANDS[command](cfg)
    elapsed = time.perf_counter() - t0
    out_dir = Path(cfg.out)
    csv_path = emit_plotdata(records, out_dir / f"{command}.csv")
    doc = {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "seed": cfg.seed,
        "trials": cfg.trials,
        "started": started.isoformat(),
        "wall_clock_s": elapsed,
        "csv": str(csv_path),
        "summary": summary,
    }
    (out_dir / f"{command}.json").write_text(json.dumps(_jsonable(doc), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(json.dumps(_jsonable(summary), ensure_ascii=False))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="csitlab", description="Experiment runner.", allow_abbrev=False)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", nargs="?", help="experiment config or channel-spec JSON")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--out")
    args, rest = parser.parse_known_args(argv)
    try:
        return run(args.command, args.config, rest, args.seed, args.trials, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except (DomainError, InfeasibleError, CapExceeded) as exc:
        print(f"infeasible parameters ({type(exc).__name__}): {exc}", file=sys.stderr)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
