"""Command-line front end.

Subcommands: derive | value | verify | simulate | sweep.  Inputs are JSON
files; outputs are JSON or CSV with 17-significant-digit floats so that runs
are byte-identical given the same configuration (including the seed) for any
thread count.

Exit codes: 0 success, 2 domain error, 3 numeric non-convergence, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .boundaries import boundary_from_json
from .errors import (
    BelowFloorError,
    DuopolyError,
    IntegrabilityError,
    InvalidSplitError,
    KindMismatchError,
    ParamDomainError,
    QuadratureNotConvergedError,
    RootBracketError,
    TooCloseToBoundaryError,
    UsageError,
    ZeroCapacityError,
)
from .mc import deviation_experiment, estimate_payoff, npv_at_boundary
from .model import ModelParams, params_from_json
from .outcomes import (
    build_abstain_outcome,
    build_aggregate_split,
    build_joint_outcome,
    build_symmetric_outcome,
)
from .values import AbstainValue, DynamicValue, SoleInvestorValue
from .verify import GridSpec, run_verification

_DOMAIN_ERRORS = (ParamDomainError, IntegrabilityError, ZeroCapacityError,
                  BelowFloorError, KindMismatchError, InvalidSplitError)
_NUMERIC_ERRORS = (QuadratureNotConvergedError, RootBracketError,
                   TooCloseToBoundaryError)

EXIT_DOMAIN = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc


def _params_block(config: dict) -> ModelParams:
    block = config if {"r", "mu", "sigma", "gamma"} <= set(config) \
        else config.get("params")
    if not isinstance(block, dict):
        raise UsageError('config needs a "params" block with r, mu, sigma, gamma')
    return params_from_json(block)


def _value_fn(config: dict, params: ModelParams):
    block = config.get("value")
    if not isinstance(block, dict) or "kind" not in block:
        raise UsageError('config needs a "value" block with a "kind"')
    kind = block["kind"]
    if kind == "abstain":
        return AbstainValue(params, float(block.get("p", params.p_star)))
    if kind == "sole_investor":
        return SoleInvestorValue(params, float(block.get("p", params.p_star)))
    if kind == "dynamic_c":
        if "c" not in block:
            raise UsageError('value kind dynamic_c needs field "c"')
        return DynamicValue(params, float(block["c"]))
    raise UsageError(f"unknown value kind: {kind!r}")


def _states(config: dict) -> list:
    raw = config.get("states", config.get("state"))
    if raw is None:
        raise UsageError('config needs "states": [[x, q1, q2], ...]')
    if raw and isinstance(raw[0], (int, float)):
        raw = [raw]
    return [(float(s[0]), float(s[1]), float(s[2])) for s in raw]


def _write_out(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_derive(args) -> int:
    config = _load_json(args.config)
    params = _params_block(config)
    _write_out(json.dumps(params.to_json(), sort_keys=True, indent=2), args.out)
    return 0


def cmd_value(args) -> int:
    config = _load_json(args.config)
    params = _params_block(config)
    fn = _value_fn(config, params)
    rows = []
    for x, q1, q2 in _states(config):
        entry = {"x": x, "q_i": q1, "q_mi": q2, "value": fn.value(x, q1, q2)}
        try:
            parts = fn.partials(x, q1, q2, ("x", "qi", "qmi"), boundary_mode="allow")
            entry["partials"] = {k: parts[k] for k in ("x", "qi", "qmi")}
        except TooCloseToBoundaryError:
            entry["partials"] = None
        rows.append(entry)
    _write_out(json.dumps(rows, sort_keys=True, indent=2), args.out)
    return 0


def cmd_verify(args) -> int:
    config = _load_json(args.config)
    params = _params_block(config)
    fn = _value_fn(config, params)
    pair = None
    if "boundaries" in config:
        blocks = config["boundaries"]
        if isinstance(blocks, dict):
            blocks = [blocks, blocks]
        pair = tuple(boundary_from_json(b, params) for b in blocks)
    grid_cfg = config.get("grid", {})
    spec = GridSpec(nx=int(grid_cfg.get("nx", 40)), nq=int(grid_cfg.get("nq", 20)),
                    x_lo_frac=float(grid_cfg.get("x_lo_frac", 0.05)),
                    q_span=float(grid_cfg.get("q_span", 5.0)))
    # A failed condition is a finding, not a program error: the report still
    # gets written and the exit code stays zero.
    report = run_verification(fn, pair=pair, spec=spec)
    _write_out(report.dumps(), args.out)
    return 0


def _builder_for(strategy: dict, params: ModelParams, q1: float, q2: float):
    """Outcome builder from a strategy block.

    The block is a boundary JSON plus optional fields:
      construction: abstain | symmetric | split | joint   (default inferred)
      abstaining_firm: 1 | 2        (abstain; default 1)
      weights: [w1, w2]             (split)
      opponent: boundary block      (joint; defaults to the own block)
    """
    boundary = boundary_from_json(strategy, params)
    construction = strategy.get("construction")
    if construction is None:
        construction = "symmetric" if strategy.get("kind") == "dynamic_c" else "abstain"
    if construction == "abstain":
        firm = int(strategy.get("abstaining_firm", 1))
        return lambda path: build_abstain_outcome((boundary, boundary), path, q1, q2, firm)
    if construction == "symmetric":
        return lambda path: build_symmetric_outcome((boundary, boundary), path, q1, q2)
    if construction == "split":
        weights = strategy.get("weights")
        if weights is None:
            raise UsageError('split construction needs "weights": [w1, w2]')
        return lambda path: build_aggregate_split((boundary, boundary), path, q1, q2, weights)
    if construction == "joint":
        opp_block = strategy.get("opponent", strategy)
        opp = boundary_from_json(opp_block, params)
        return lambda path: build_joint_outcome(boundary, opp, path, q1, q2)
    raise UsageError(f"unknown construction: {construction!r}")


def cmd_simulate(args) -> int:
    params = _params_block(_load_json(args.params))
    strategy = _load_json(args.strategy)
    try:
        x0, q1, q2 = (float(v) for v in args.state.split(","))
    except ValueError as exc:
        raise UsageError(f"--state must be x,q1,q2, got {args.state!r}") from exc
    builder = _builder_for(strategy, params, q1, q2)
    boundary = boundary_from_json(strategy, params)
    firm = int(strategy.get("firm", 1))
    if args.dump_outcomes:
        from .outcomes import dump_outcome_csv
        from .paths import generate_path

        for j in range(args.dump_count):
            path = generate_path(params, x0, args.dt, args.horizon, args.seed, j)
            with open(f"{args.dump_outcomes}{j}.csv", "w", newline="") as fh:
                dump_outcome_csv(builder(path), fh)
    est = estimate_payoff(params, builder, firm, x0, n_paths=args.paths,
                          dt=args.dt, horizon=args.horizon, seed=args.seed,
                          tail_boundary=boundary, threads=args.threads)
    _write_out(est.dumps(), args.out)
    return 0


def cmd_sweep(args) -> int:
    config = _load_json(args.config)
    params = _params_block(config)
    sweep = config.get("sweep")
    if not isinstance(sweep, dict) or "kind" not in sweep:
        raise UsageError('config needs a "sweep" block with a "kind"')
    states = _states(config)
    kind = sweep["kind"]
    if kind == "dynamic_c":
        levels = [float(v) for v in sweep.get("c_values", [])]
        fns = [(lvl, DynamicValue(params, lvl)) for lvl in levels]
        level_col = "c"
    elif kind in ("abstain", "sole_investor", "constant_price"):
        levels = [float(v) for v in sweep.get("p_values", [])]
        make = SoleInvestorValue if kind == "sole_investor" else AbstainValue
        fns = [(lvl, make(params, lvl)) for lvl in levels]
        level_col = "p"
    else:
        raise UsageError(f"unknown sweep kind: {kind!r}")
    if not fns:
        raise UsageError("sweep needs a nonempty list of levels")

    header = ["r", "mu", "sigma", "gamma", "beta", "p_star", "mu_gamma",
              "kind", level_col, "x", "q_i", "q_mi", "value"]
    derived = [params.r, params.mu, params.sigma, params.gamma,
               params.beta, params.p_star, params.mu_gamma]
    lines = []
    for lvl, fn in fns:
        for x, q1, q2 in states:
            row = [*(_g17(v) for v in derived), kind, _g17(lvl),
                   _g17(x), _g17(q1), _g17(q2), _g17(fn.value(x, q1, q2))]
            lines.append(row)
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(lines)
    _write_out(buf.getvalue(), args.out)
    return 0


def cmd_npv(args) -> int:
    params = _params_block(_load_json(args.config))
    _write_out(json.dumps({"p": args.p, "npv_per_unit": npv_at_boundary(params, args.p)},
                          sort_keys=True), args.out)
    return 0


def cmd_deviation(args) -> int:
    params = _params_block(_load_json(args.params))
    eq = boundary_from_json(_load_json(args.equilibrium), params)
    dev = boundary_from_json(_load_json(args.deviant), params)
    x0, q1, q2 = (float(v) for v in args.state.split(","))
    res = deviation_experiment(params, eq, dev, x0, q1, q2, n_paths=args.paths,
                               dt=args.dt, horizon=args.horizon, seed=args.seed,
                               threads=args.threads)
    _write_out(json.dumps(res.to_json(), sort_keys=True), args.out)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="duopoly-invest",
                     description="Closed-loop capacity-investment duopoly laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("derive", help="derive beta, p_star, mu_gamma from primitives")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(fn=cmd_derive)

    p = sub.add_parser("value", help="evaluate a value function at states")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(fn=cmd_value)

    p = sub.add_parser("verify", help="run the verification-condition report")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo payoff of an outcome construction")
    p.add_argument("--params", required=True, help="params JSON file")
    p.add_argument("--strategy", required=True, help="strategy JSON file")
    p.add_argument("--state", required=True, help="x,q1,q2")
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-outcomes", default=None, metavar="PREFIX",
                   help="write t,x,q1,q2 CSVs for the first --dump-count paths")
    p.add_argument("--dump-count", type=int, default=1)
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="value sweep over thresholds; CSV output")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("npv", help="marginal NPV of investing at threshold p")
    p.add_argument("--config", required=True)
    p.add_argument("--p", type=float, required=True)
    common(p)
    p.set_defaults(fn=cmd_npv)

    p = sub.add_parser("deviation", help="payoff gap of a deviant strategy")
    p.add_argument("--params", required=True)
    p.add_argument("--equilibrium", required=True)
    p.add_argument("--deviant", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(fn=cmd_deviation)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DOMAIN_ERRORS as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except _NUMERIC_ERRORS as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DuopolyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
