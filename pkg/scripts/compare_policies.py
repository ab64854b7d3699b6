"""Payoff of CB-AL against the no-prior and always-query baselines.

    python scripts/compare_policies.py --reps 20 --horizon 10000 --out runs/compare
"""
import argparse

from cbal.baselines import POLICY_KINDS
from cbal.harness import RunConfig, compare


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=2, help="d_X = d_K")
    ap.add_argument("--exploit", default="best", choices=("best", "lowest"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    a = ap.parse_args()
    base = RunConfig.from_flat(dict(d_X=a.dim, horizon=a.horizon, replications=a.reps, seed=a.seed,
                                    exploit=a.exploit))
    rows = compare([base.replace(policy=p) for p in POLICY_KINDS], workers=a.workers, out=a.out)
    for r in rows:
        print(f"{r['policy']:>14}  payoff {r['payoff_mean']:10.2f} +- {r['payoff_stderr']:.2f}"
              f"  pct_vs_always_query {r['pct_vs_always_query']:+7.2f}")


if __name__ == "__main__":
    main()
