"""Command line entry point: ``cbal {run,compare,sweep-cost,slope-check,verify}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import harness
from .baselines import POLICY_KINDS


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _csv(cast):
    return lambda text: [cast(v) for v in text.split(",") if v]


def _config(args) -> harness.RunConfig:
    overrides = dict(seed=args.seed, replications=args.reps, horizon=args.horizon, out=args.out)
    if args.trace:
        overrides["record_trace"] = True
    for item in args.set or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        overrides[key] = _value(val)
    if args.config:
        return harness.load_config(args.config, **overrides)
    return harness.RunConfig.from_flat({k: v for k, v in overrides.items() if v is not None})


def _print_kv(d: dict) -> None:
    for k, v in d.items():
        print(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")


def cmd_run(args) -> int:
    summary = harness.run(_config(args), workers=args.workers)
    _print_kv(summary.as_dict())
    return 0


def cmd_compare(args) -> int:
    base = _config(args)
    configs = [base.replace(policy=p, out=None) for p in POLICY_KINDS]
    rows = harness.compare(configs, workers=args.workers, out=base.out)
    for row in rows:
        print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    return 0


def cmd_sweep(args) -> int:
    base = _config(args)
    rows = harness.sweep_cost(base.replace(out=None), args.c, horizons=args.horizons, workers=args.workers, out=base.out)
    print("T,c,payoff_mean,payoff_stderr")
    for r in rows:
        print(f"{r['T']},{r['c']},{r['payoff_mean']:.6g},{r['payoff_stderr']:.6g}")
    Ts = sorted({r["T"] for r in rows})
    lo, hi = min(args.c), max(args.c)
    for T in Ts:
        print(f"relative_drop[T={T}, c {lo}->{hi}]={harness.relative_drop(rows, T, lo, hi):.4f}")
    return 0


def cmd_slope(args) -> int:
    cfg = _config(args)
    summary = harness.run(cfg, workers=args.workers)
    cps = summary.mean_checkpoints()
    lo, hi = args.epochs if args.epochs else (None, None)
    pts = [(t, r) for e, t, r, _, _ in cps if (lo is None or lo <= e <= hi)]
    slope = harness.fit_regret_exponent(pts, tail=None if args.epochs else args.tail)
    theory = harness.theoretical_exponent(cfg.params.d_X, cfg.params.d_K)
    ratios = [r / t for t, r in pts[-4:]]
    print(f"slope={slope:.4f}")
    print(f"theoretical_exponent={theory:.4f}")
    print("regret_over_T_last4=" + ",".join(f"{v:.5f}" for v in ratios))
    print(f"sublinear={all(b < a for a, b in zip(ratios, ratios[1:]))}")
    return 0


def cmd_verify(args) -> int:
    lemma1 = harness.verify_lemma1(trials=args.trials, seed=args.seed or 0)
    print("lemma1: " + ", ".join(f"{k}={v}" for k, v in lemma1.items()))
    cfg = _config(args)
    summary = harness.run(cfg, workers=args.workers, keep_epochs=True)
    lemma2 = harness.verify_lemma2(summary.replications, cfg.landscape, cfg.params, min_epoch=args.min_epoch)
    print("lemma2: " + ", ".join(f"{k}={v}" for k, v in lemma2.items()))
    if cfg.out:
        with open(os.path.join(cfg.out, "verify.txt"), "w") as fh:
            for name, d in (("lemma1", lemma1), ("lemma2", lemma2)):
                for k, v in d.items():
                    fh.write(f"{name}.{k}={v!r}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--reps", type=int, help="number of replications")
    common.add_argument("--horizon", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--trace", action="store_true", help="write the per-slot trace.csv")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="cbal", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common]).set_defaults(func=cmd_run)
    sub.add_parser("compare", parents=[common]).set_defaults(func=cmd_compare)
    p = sub.add_parser("sweep-cost", parents=[common])
    p.add_argument("--c", type=_csv(float), default=[0.1, 0.25, 0.5, 1.0])
    p.add_argument("--horizons", type=_csv(int))
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("slope-check", parents=[common])
    p.add_argument("--epochs", type=_csv(int), help="first,last epoch of the fit window")
    p.add_argument("--tail", type=int, default=6, help="checkpoints used when --epochs is not given")
    p.set_defaults(func=cmd_slope)
    p = sub.add_parser("verify", parents=[common])
    p.add_argument("--trials", type=int, default=10**6)
    p.add_argument("--min-epoch", type=int, default=6)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
