"""Seeded replications, payoff/regret accounting, experiment drivers and file outputs."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import DEBUG_KINDS, POLICY_KINDS, make_policy
from .environment import Landscape, cluster_oracle, mean_reward, oracle_best, query_cost
from .policy import ARM_PICKS, EXPLOIT_RULES, FULL_UNCERTAINTY, AlgoParams, deviation_D, epsilon
from .spaces import build_partition, nominal_radius

log = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "rep", "t", "epoch", "m", "n", "phase", "q", "cost", "reward_sampled",
    "mu", "mu_star", "prior_valid", "cum_payoff", "cum_pseudo_regret",
)
CHECKPOINT_COLUMNS = ("epoch", "T", "regret", "payoff", "cost")

_PARAM_KEYS = tuple(f.name for f in dataclasses.fields(AlgoParams))
_LANDSCAPE_KEYS = ("family", "lam")
_RUN_KEYS = ("horizon", "policy", "seed", "replications", "out", "arm_pick", "exploit", "record_trace")
CONFIG_KEYS = _PARAM_KEYS + _LANDSCAPE_KEYS + _RUN_KEYS


@dataclass(frozen=True)
class RunConfig:
    params: AlgoParams = field(default_factory=AlgoParams)
    landscape: Landscape = field(default_factory=Landscape)
    horizon: int = 10_000
    policy: str = "cbal"
    seed: int = 0
    replications: int = 1
    out: Optional[str] = None
    arm_pick: str = "center"
    exploit: str = "best"
    record_trace: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.policy not in POLICY_KINDS + DEBUG_KINDS:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.arm_pick not in ARM_PICKS:
            raise ValueError(f"arm_pick must be one of {ARM_PICKS}")
        if self.exploit not in EXPLOIT_RULES:
            raise ValueError(f"exploit must be one of {EXPLOIT_RULES}")
        p, land = self.params, self.landscape
        if (p.d_X, p.d_K) != (land.d_X, land.d_K):
            raise ValueError(f"params dimensions {(p.d_X, p.d_K)} do not match landscape {(land.d_X, land.d_K)}")

    @classmethod
    def from_flat(cls, values: dict) -> "RunConfig":
        """Build from a flat key-value mapping; unknown keys are rejected.

        Unset Lipschitz constants default to the landscape's true ones.
        """
        unknown = sorted(set(values) - set(CONFIG_KEYS))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        d_X = int(values.get("d_X", 2))
        d_K = int(values.get("d_K", d_X))
        land = Landscape(values.get("family", "peak"), float(values.get("lam", 0.5)), d_X, d_K)
        pk = {k: values[k] for k in _PARAM_KEYS if k in values}
        pk.setdefault("L_X", land.L_X)
        pk.setdefault("L_K", land.L_K)
        pk["d_X"], pk["d_K"] = d_X, d_K
        run = {k: values[k] for k in _RUN_KEYS if k in values}
        return cls(params=AlgoParams(**pk), landscape=land, **run)

    def to_flat(self) -> dict:
        flat = dataclasses.asdict(self.params)
        flat.update(family=self.landscape.family, lam=self.landscape.lam)
        flat.update({k: getattr(self, k) for k in _RUN_KEYS})
        return flat

    def replace(self, **changes) -> "RunConfig":
        """Copy with flat-key overrides (parameters, landscape or run fields)."""
        flat = self.to_flat()
        flat.update(changes)
        return RunConfig.from_flat(flat)


def load_config(path: str, **overrides) -> RunConfig:
    with open(path) as fh:
        values = json.load(fh)
    if not isinstance(values, dict) or any(isinstance(v, (dict, list)) for v in values.values()):
        raise ValueError(f"{path}: config must be a flat key-value object")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_flat(values)


@dataclass
class ReplicationResult:
    rep: int
    seed: int
    payoff: float
    expected_payoff: float
    regret: float
    realized_regret: float
    cost: float
    queries: int
    reward: float
    oracle_reward: float
    checkpoints: List[Tuple[int, int, float, float, float]]
    prior_checks: int = 0
    prior_valid: int = 0
    first_round_queries: int = 0
    first_round_valid: int = 0
    stop_events: List[Tuple[int, int, int, float]] = field(default_factory=list)
    epochs: Optional[List[dict]] = None
    trace: Optional[List[tuple]] = None


def _epoch_record(policy, complete: bool) -> dict:
    return {
        "epoch": policy.epoch,
        "complete": complete,
        "states": {
            m: {
                "active": list(st.active),
                "eliminated": dict(st.eliminated),
                "stop_round": st.stop_round,
                "stop_active": st.stop_active,
            }
            for m, st in policy.states.items()
        },
    }


def run_replication(config: RunConfig, rep: int, keep_epochs: bool = False) -> ReplicationResult:
    """Simulate slots 1..horizon for one replication seeded with ``seed + rep``."""
    p, land, T = config.params, config.landscape, config.horizon
    seed = config.seed + rep
    ctx_ss, rew_ss, arm_ss = np.random.SeedSequence(seed).spawn(3)
    contexts = np.random.default_rng(ctx_ss).random((T, p.d_X)).tolist()
    uniforms = np.random.default_rng(rew_ss).random(T).tolist()
    policy = make_policy(
        config.policy, p, landscape=land, arm_pick=config.arm_pick, exploit=config.exploit,
        rng=np.random.default_rng(arm_ss) if config.arm_pick == "random" else None,
    )

    trace = [] if config.record_trace else None
    epochs = [] if keep_epochs else None
    checkpoints = []
    cum_payoff = cum_expected = cum_regret = cum_realized = cum_cost = cum_reward = cum_star = 0.0
    queries = checks = valid = first = first_valid = 0
    epoch, next_epoch = -1, 1
    for t in range(1, T + 1):
        if t == next_epoch:
            if keep_epochs and epoch >= 0:
                epochs.append(_epoch_record(policy, True))
            epoch += 1
            next_epoch <<= 1
            policy.begin_epoch(epoch)
        x = tuple(contexts[t - 1])
        dec = policy.step(x)
        mu = mean_reward(land, x, dec.arm)
        _, mu_star = oracle_best(land, x)
        r = 1.0 if uniforms[t - 1] < mu else 0.0
        cost = 0.0
        ok = None
        if dec.query:
            prior = dec.prior
            cost = query_cost(prior, p)
            ok = prior.a <= mu <= prior.b
            queries += 1
            if prior is FULL_UNCERTAINTY:
                first += 1
                first_valid += ok
            else:
                checks += 1
                valid += ok
            policy.observe(dec, r)
        cum_payoff += r - cost
        cum_expected += mu - cost
        cum_regret += (mu_star - mu) + cost
        cum_realized += (mu_star - r) + cost
        cum_cost += cost
        cum_reward += r
        cum_star += mu_star
        if trace is not None:
            trace.append((rep, t, epoch, dec.context_cluster, dec.arm_cluster, dec.phase, int(dec.query),
                          cost, r, mu, mu_star, "" if ok is None else int(ok), cum_payoff, cum_regret))
        if t & (t - 1) == 0:
            checkpoints.append((epoch, t, cum_regret, cum_payoff, cum_cost))
    if keep_epochs:
        epochs.append(_epoch_record(policy, False))
    return ReplicationResult(
        rep=rep, seed=seed, payoff=cum_payoff, expected_payoff=cum_expected, regret=cum_regret,
        realized_regret=cum_realized, cost=cum_cost, queries=queries, reward=cum_reward,
        oracle_reward=cum_star, checkpoints=checkpoints, prior_checks=checks, prior_valid=valid,
        first_round_queries=first, first_round_valid=first_valid, stop_events=[(e.epoch, e.m, e.stop_round, e.bound) for e in policy.stop_events],
        epochs=epochs, trace=trace,
    )


def _mean_se(values: Sequence[float]) -> Tuple[float, float]:
    a = np.asarray(values, dtype=float)
    if a.size < 2:
        return float(a.mean()), 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


@dataclass
class RunSummary:
    config: RunConfig
    replications: List[ReplicationResult]

    def stat(self, name: str) -> Tuple[float, float]:
        return _mean_se([getattr(r, name) for r in self.replications])

    def mean_checkpoints(self) -> List[Tuple[int, int, float, float, float]]:
        rows = []
        for cps in zip(*(r.checkpoints for r in self.replications)):
            epoch, t = cps[0][0], cps[0][1]
            rows.append((epoch, t, *(float(np.mean([c[j] for c in cps])) for j in (2, 3, 4))))
        return rows

    @property
    def prior_validity(self) -> float:
        checks = sum(r.prior_checks for r in self.replications)
        return sum(r.prior_valid for r in self.replications) / checks if checks else 1.0

    def as_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {"policy": self.config.policy, "horizon": self.config.horizon,
                                  "replications": len(self.replications), "seed": self.config.seed}
        for name in ("payoff", "expected_payoff", "regret", "realized_regret", "cost", "queries", "reward"):
            mean, se = self.stat(name)
            out[f"{name}_mean"] = mean
            out[f"{name}_stderr"] = se
        out["prior_checks"] = sum(r.prior_checks for r in self.replications)
        out["prior_validity"] = self.prior_validity
        out["first_round_queries"] = sum(r.first_round_queries for r in self.replications)
        out["stop_events"] = sum(len(r.stop_events) for r in self.replications)
        for epoch, t, regret, payoff, cost in self.mean_checkpoints():
            out[f"regret_T{t}"] = regret
        return out


def _rep_job(args):
    config, rep, keep_epochs = args
    return run_replication(config, rep, keep_epochs)


def run(config: RunConfig, workers: int = 1, keep_epochs: bool = False) -> RunSummary:
    """Run every replication; results are merged in replication order regardless of ``workers``."""
    jobs = [(config, r, keep_epochs) for r in range(config.replications)]
    log.info("running %s: T=%d, %d replications", config.policy, config.horizon, config.replications)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_rep_job, jobs))
    else:
        results = [_rep_job(j) for j in jobs]
    summary = RunSummary(config, results)
    if config.out:
        write_run_outputs(summary, config.out)
    return summary


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def write_run_outputs(summary: RunSummary, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        for k, v in sorted(summary.config.to_flat().items()):
            fh.write(f"config.{k}={_fmt(v)}\n")
        for k, v in summary.as_dict().items():
            fh.write(f"{k}={_fmt(v)}\n")
    with open(os.path.join(out_dir, "checkpoints.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHECKPOINT_COLUMNS)
        for row in summary.mean_checkpoints():
            w.writerow([_fmt(v) for v in row])
    if summary.config.record_trace:
        with open(os.path.join(out_dir, "trace.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for rep in summary.replications:
                for row in rep.trace:
                    w.writerow([_fmt(v) for v in row])


def _environment_key(config: RunConfig) -> dict:
    flat = config.to_flat()
    for k in ("policy", "out", "record_trace"):
        flat.pop(k)
    return flat


def percent_diff(u_a: float, u_b: float) -> float:
    return 100.0 * (u_a - u_b) / abs(u_b)


def compare(configs: Sequence[RunConfig], workers: int = 1, out: Optional[str] = None) -> List[dict]:
    """Mean final payoff per policy plus pairwise percentage differences."""
    if not configs:
        raise ValueError("nothing to compare")
    ref = _environment_key(configs[0])
    for cfg in configs[1:]:
        if _environment_key(cfg) != ref:
            raise ValueError(f"policy {cfg.policy!r} runs in a different environment than {configs[0].policy!r}")
    summaries = [run(cfg, workers=workers) for cfg in configs]
    rows = []
    for s in summaries:
        payoff, se = s.stat("payoff")
        row = {"policy": s.config.policy, "payoff_mean": payoff, "payoff_stderr": se,
               "regret_mean": s.stat("regret")[0], "cost_mean": s.stat("cost")[0],
               "queries_mean": s.stat("queries")[0], "reward_mean": s.stat("reward")[0],
               "prior_validity": s.prior_validity}
        for other in summaries:
            row[f"pct_vs_{other.config.policy}"] = percent_diff(payoff, other.stat("payoff")[0])
        rows.append(row)
    if out:
        _write_rows(os.path.join(out, "compare.csv"), rows)
    return rows


def sweep_cost(base: RunConfig, c_values: Sequence[float], horizons: Optional[Sequence[int]] = None,
               workers: int = 1, out: Optional[str] = None) -> List[dict]:
    """CB-AL payoff as a function of the cost scale, common seeds across cost values."""
    if len(c_values) < 2:
        raise ValueError("a cost sweep needs at least two values of c")
    rows = []
    for T in horizons or [base.horizon]:
        for c in c_values:
            s = run(base.replace(c=float(c), horizon=int(T), out=None, record_trace=False), workers=workers)
            payoff, se = s.stat("payoff")
            rows.append({"T": int(T), "c": float(c), "payoff_mean": payoff, "payoff_stderr": se,
                         "cost_mean": s.stat("cost")[0], "reward_mean": s.stat("reward")[0],
                         "regret_mean": s.stat("regret")[0]})
    if out:
        _write_rows(os.path.join(out, "sweep.csv"), rows)
    return rows


def relative_drop(rows: Sequence[dict], T: int, c_lo: float, c_hi: float) -> float:
    by_c = {r["c"]: r["payoff_mean"] for r in rows if r["T"] == T}
    return (by_c[c_lo] - by_c[c_hi]) / abs(by_c[c_lo])


def _write_rows(path: str, rows: Sequence[dict]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def fit_regret_exponent(checkpoints: Iterable[Tuple[float, float]], tail: Optional[int] = None) -> float:
    """Least-squares slope of log R against log T.

    Non-positive regrets are dropped; ``tail`` keeps only the last points.
    """
    pts = [(float(T), float(R)) for T, R in checkpoints if R > 0]
    if tail is not None:
        pts = pts[-tail:]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 checkpoints with positive regret, got {len(pts)}")
    Ts = [T for T, _ in pts]
    if any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise ValueError("checkpoint horizons must be strictly increasing")
    x = np.log(Ts)
    y = np.log([R for _, R in pts])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def theoretical_exponent(d_X: int, d_K: int) -> float:
    return (d_X + d_K + 1.0) / (d_X + d_K + 2.0)


def verify_lemma1(mu: float = 0.5, s: int = 64, T_i: int = 256, gamma: float = 0.5,
                  trials: int = 10**6, seed: int = 0, chunk: int = 50_000) -> dict:
    """Monte Carlo frequency of a sample mean of ``s`` Bernoulli(mu) rewards leaving mu +- D(s)."""
    rng = np.random.default_rng(seed)
    width = deviation_D(s, T_i, gamma)
    abnormal = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        means = (rng.random((n, s)) < mu).mean(axis=1)
        abnormal += int(np.count_nonzero(np.abs(means - mu) > width))
        done += n
    return {"D": width, "trials": trials, "abnormal": abnormal, "rate": abnormal / trials,
            "bound": 2.0 * math.exp(-2.0 * width**2 * s), "T_power": T_i ** (-(1.0 + gamma))}


def cluster_rewards(land: Landscape, params: AlgoParams, i: int, grid_n: int = 9) -> np.ndarray:
    """Matrix of lattice cluster rewards mu(m, n) for every context/arm cluster pair of epoch ``i``."""
    rho = nominal_radius(i, params.alpha)
    cp = build_partition(params.d_X, rho)
    ap = build_partition(params.d_K, rho)
    out = np.empty((cp.cluster_count, ap.cluster_count))
    for m in range(cp.cluster_count):
        for n in range(ap.cluster_count):
            out[m, n] = cluster_oracle(land, cp.bounds(m), ap.bounds(n), grid_n)
    return out


def verify_lemma2(results: Sequence[ReplicationResult], land: Landscape, params: AlgoParams,
                  min_epoch: int = 0, grid_n: int = 9) -> dict:
    """Survival of eps-optimal clusters per (epoch, context cluster) and 2eps-optimality at stop time."""
    cache: Dict[int, np.ndarray] = {}
    cases = survived = 0
    stop_survivors = stop_good = stops = 0
    for res in results:
        if res.epochs is None:
            raise ValueError("replication was run without epoch records")
        for rec in res.epochs:
            i = rec["epoch"]
            if i < min_epoch:
                continue
            if i not in cache:
                cache[i] = cluster_rewards(land, params, i, grid_n)
            mu = cache[i]
            eps = epsilon(i, params)
            for m, st in rec["states"].items():
                best = mu[m].max()
                good = np.flatnonzero(mu[m] >= best - eps)
                cases += 1
                survived += all(int(n) not in st["eliminated"] for n in good)
                if st["stop_active"] is not None:
                    stops += 1
                    stop_survivors += len(st["stop_active"])
                    stop_good += sum(mu[m, n] >= best - 2.0 * eps for n in st["stop_active"])
    return {
        "cases": cases,
        "survival_rate": survived / cases if cases else 1.0,
        "stops": stops,
        "stop_survivors": stop_survivors,
        "stop_optimal_rate": stop_good / stop_survivors if stop_survivors else 1.0,
    }
