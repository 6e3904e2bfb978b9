"""End-to-end reproduction run: derive constants, verify both equilibrium
families, and cross-check the constant-price value by Monte Carlo.

Writes JSON reports under results/ (created next to this script's cwd).

    python scripts/reproduce_equilibria.py [--fast]
"""

import argparse
import json
import math
import pathlib
import time

from duopoly_invest import (
    AbstainValue,
    ConstantPriceBoundary,
    DynamicValue,
    GridSpec,
    build_abstain_outcome,
    build_symmetric_outcome,
    derive_params,
    estimate_payoff,
    run_verification,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fast", action="store_true", help="small grids and path counts")
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    params = derive_params(r=1.0, mu=0.0, sigma=math.sqrt(2.0), gamma=1.5)
    (outdir / "params.json").write_text(json.dumps(params.to_json(), indent=2))
    print("derived constants:", params.to_json())

    spec = GridSpec(nx=12, nq=6) if args.fast else GridSpec()
    n_paths = 2_000 if args.fast else 50_000

    cp = ConstantPriceBoundary(params, params.p_star)
    t0 = time.time()
    report = run_verification(
        AbstainValue(params, params.p_star), spec=spec,
        simulation=dict(
            builder=lambda path: build_abstain_outcome((cp, cp), path, 1.0, 1.0, 1),
            x0=2.0, horizon=8.0, n_paths=100, dt=0.01, seed=7))
    (outdir / "verify_constant_price.json").write_text(report.dumps())
    print(f"constant-price verification: all_pass={report.all_pass} "
          f"[{time.time() - t0:.0f}s]")

    for c in (0.0, 0.5, 1.0):
        fn = DynamicValue(params, c)
        dyn = fn.boundary
        q1 = dyn.q_floor + 0.2 if c > 0 else 1.0
        q2 = q1 + 0.2
        t0 = time.time()
        report = run_verification(
            fn, spec=spec,
            simulation=dict(
                builder=lambda path, b=dyn, a=q1, bb=q2:
                    build_symmetric_outcome((b, b), path, a, bb),
                x0=0.9 * dyn.trigger(q2, q2), horizon=6.0, n_paths=80,
                dt=0.01, seed=7))
        (outdir / f"verify_dynamic_c{c}.json").write_text(report.dumps())
        print(f"dynamic c={c} verification: all_pass={report.all_pass} "
              f"[{time.time() - t0:.0f}s]")

    x0 = params.p_star * 2.0 ** (1.0 / params.gamma) / 2.0
    target = AbstainValue(params, params.p_star).value(x0, 1.0, 1.0)
    t0 = time.time()
    est = estimate_payoff(
        params, lambda path: build_abstain_outcome((cp, cp), path, 1.0, 1.0, 1),
        firm=1, x0=x0, n_paths=n_paths, dt=1e-3, horizon=20.0, seed=1905,
        tail_boundary=cp)
    (outdir / "mc_constant_price.json").write_text(est.dumps())
    print(f"MC abstain payoff {est.mean:.5f} +- {est.se:.5f} vs analytic "
          f"{target:.5f} [{time.time() - t0:.0f}s]")


if __name__ == "__main__":
    main()
