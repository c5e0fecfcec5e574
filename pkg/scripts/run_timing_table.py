#!/usr/bin/env python3
"""Wall-clock cost of 10,000 sweeps at increasing VAR dimensions, the
scaling benchmark for the equation-wise coefficient update.
"""

import argparse
import time

from oivarsv import build_priors, generate_section5, run_mcmc


def time_run(n: int, T: int, p: int, sweeps: int, seed: int) -> float:
    ds, _, _ = generate_section5(seed=seed, n=n, T=T, p=p)
    Y, X = ds.regression_matrices(p)
    priors = build_priors(ds.transformed, p, ds.level_flags)
    t0 = time.perf_counter()
    run_mcmc(Y, X, priors, p, n_burn=sweeps, n_draws=0, seed=seed)
    return time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sweeps", type=int, default=10_000)
    ap.add_argument("--dims", default="10,20")
    ap.add_argument("--T", type=int, default=300)
    ap.add_argument("--lags", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    dims = [int(tok) for tok in args.dims.split(",")]
    print(f"{args.sweeps} sweeps, T={args.T}, p={args.lags}")
    print(f"{'n':>4s} {'minutes':>10s} {'ms/sweep':>10s}")
    for n in dims:
        elapsed = time_run(n, args.T, args.lags, args.sweeps, args.seed)
        print(f"{n:>4d} {elapsed / 60:>10.2f} {1e3 * elapsed / args.sweeps:>10.2f}")


if __name__ == "__main__":
    main()
