"""Fit the log-log slope of cumulative regret at the epoch boundaries.

Defaults are the 1-d setting used by the acceptance suite (lam = 0.1, L = 3.1, T = 2^17).
"""
import argparse

from cbal.harness import RunConfig, fit_regret_exponent, run, theoretical_exponent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=17, help="horizon is 2**epochs")
    ap.add_argument("--fit-from", type=int, default=11, help="first epoch in the fit window")
    ap.add_argument("--L", type=float, default=3.1)
    ap.add_argument("--lam", type=float, default=0.1)
    ap.add_argument("--dim", type=int, default=1)
    ap.add_argument("--exploit", default="best", choices=("best", "lowest"))
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    a = ap.parse_args()
    cfg = RunConfig.from_flat(dict(d_X=a.dim, L=a.L, lam=a.lam, exploit=a.exploit, horizon=2**a.epochs,
                                   replications=a.reps, seed=a.seed, out=a.out))
    summary = run(cfg, workers=a.workers)
    pts = []
    for e, T, R, payoff, cost in summary.mean_checkpoints():
        print(f"epoch {e:>2}  T={T:>7}  R={R:11.2f}  R/T={R / T:.4f}")
        if e >= a.fit_from:
            pts.append((T, R))
    print(f"slope {fit_regret_exponent(pts):.3f}  theory {theoretical_exponent(a.dim, a.dim):.3f}")


if __name__ == "__main__":
    main()
