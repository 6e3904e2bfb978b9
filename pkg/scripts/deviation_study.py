"""Deviation payoffs around the two equilibrium families.

For a ladder of deviant constant-price thresholds, estimates the payoff gap
relative to staying on the equilibrium strategy, under common random
numbers.  Writes a CSV with one row per deviant threshold.

    python scripts/deviation_study.py [--paths N] [--out FILE]
"""

import argparse
import csv
import math
import sys

from duopoly_invest import (
    ConstantPriceBoundary,
    DynamicBoundary,
    derive_params,
    deviation_experiment,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--dt", type=float, default=2e-3)
    ap.add_argument("--horizon", type=float, default=12.0)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    params = derive_params(r=1.0, mu=0.0, sigma=math.sqrt(2.0), gamma=1.5)
    x0 = params.p_star * 2.0 ** (1.0 / params.gamma) / 2.0

    rows = []
    eq = ConstantPriceBoundary(params, params.p_star)
    for frac in (0.8, 0.9, 1.0, 1.1, 1.2):
        dev = ConstantPriceBoundary(params, frac * params.p_star)
        res = deviation_experiment(params, eq, dev, x0, 1.0, 1.0,
                                   n_paths=args.paths, dt=args.dt,
                                   horizon=args.horizon, seed=args.seed)
        rows.append(["constant_price", format(frac, ".3f"), res.diff_mean,
                     res.diff_se, res.n])
        print(f"deviant {frac:.2f}*p* vs p*: gap {res.diff_mean:+.5f} "
              f"(+-{res.diff_se:.5f})")

    dyn = DynamicBoundary(params, 1.0)
    q0 = 1.1 * dyn.q_floor
    res = deviation_experiment(params, dyn, ConstantPriceBoundary(params, params.p_star),
                               3.0, q0, q0, n_paths=args.paths, dt=args.dt,
                               horizon=args.horizon, seed=args.seed)
    rows.append(["preempt_reactive", "1.000", res.diff_mean, res.diff_se, res.n])
    print(f"preempting the reactive c=1 opponent at p*: gap {res.diff_mean:+.5f} "
          f"(+-{res.diff_se:.5f})")

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh)
    writer.writerow(["experiment", "level", "diff_mean", "diff_se", "n"])
    for row in rows:
        writer.writerow(row)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
