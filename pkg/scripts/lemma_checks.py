"""Monte Carlo check of the concentration bound and the elimination-safety invariant."""
import argparse

from cbal.harness import RunConfig, run, verify_lemma1, verify_lemma2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10**6)
    ap.add_argument("--epochs", type=int, default=14)
    ap.add_argument("--min-epoch", type=int, default=6)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    l1 = verify_lemma1(trials=a.trials, seed=a.seed)
    print(f"concentration: {l1['abnormal']} of {l1['trials']} sample means outside D "
          f"(rate {l1['rate']:.2e}, bound {l1['bound']:.2e})")
    cfg = RunConfig.from_flat(dict(d_X=1, horizon=2**a.epochs, replications=a.reps, seed=a.seed))
    summary = run(cfg, workers=a.workers, keep_epochs=True)
    l2 = verify_lemma2(summary.replications, cfg.landscape, cfg.params, min_epoch=a.min_epoch)
    print(f"elimination: eps-optimal survival {l2['survival_rate']:.4f} over {l2['cases']} cases; "
          f"2eps-optimal at stop {l2['stop_optimal_rate']:.4f} over {l2['stop_survivors']} survivors")


if __name__ == "__main__":
    main()
