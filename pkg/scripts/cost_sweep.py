"""Mean CB-AL payoff as the query-cost scale c grows, at two horizons.

    python scripts/cost_sweep.py --out runs/sweep
"""
import argparse

from cbal.harness import RunConfig, relative_drop, sweep_cost


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, nargs="+", default=[0.1, 0.25, 0.5, 1.0])
    ap.add_argument("--horizons", type=int, nargs="+", default=[10_000, 20_000])
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    a = ap.parse_args()
    base = RunConfig.from_flat(dict(d_X=a.dim, replications=a.reps, seed=a.seed))
    rows = sweep_cost(base, a.c, horizons=a.horizons, workers=a.workers, out=a.out)
    for r in rows:
        print(f"T={r['T']:>6}  c={r['c']:<5} payoff {r['payoff_mean']:10.2f} +- {r['payoff_stderr']:.2f}")
    lo, hi = min(a.c), max(a.c)
    for T in a.horizons:
        print(f"relative drop c {lo}->{hi} at T={T}: {relative_drop(rows, T, lo, hi):.3f}")


if __name__ == "__main__":
    main()
