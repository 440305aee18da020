"""Command-line interface.

Exit codes: 0 success, 2 malformed input or bad arguments, 3 verification
or budget violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, plotting, reports
from .delayed import TauModel
from .errors import DyntreeError, InternalConsistencyError, StreamFormatError
from .gains import gain_kind
from .maintainer import Maintainer
from .oracles import FeasibilityParams, check_feasibility
from .rules import ThresholdRule
from .streams import GENERATORS, convert_csv, generate, read_stream, write_stream
from .tree import DecisionTree, greedy_build

EXIT_OK, EXIT_BAD_INPUT, EXIT_VIOLATION = 0, 2, 3


class UsageError(Exception):
    pass


def _sizes(text):
    try:
        vals = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not vals or min(vals) < 16:
        raise argparse.ArgumentTypeError("sizes must be integers >= 16")
    return tuple(vals)


def _unit(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1]")
    return v


def _add_rule_args(p, beta=True):
    p.add_argument("--gain", choices=["gini", "info", "var"], default="gini")
    p.add_argument("--alpha", type=_unit, default=0.3)
    if beta:
        p.add_argument("--beta", type=_unit, default=0.3)
    p.add_argument("--k-star", type=int, default=0)
    p.add_argument("--h-star", type=int, default=None)
    p.add_argument("--c", type=float, default=None,
                   help="label bound for the variance gain (default: header c, else max |y|)")


def _kind_for(args, stream):
    if (args.gain == "var") != (stream.header.label_type == "real"):
        raise UsageError(f"gain {args.gain} does not match label type {stream.header.label_type}")
    c = args.c
    if c is None and args.gain == "var":
        c = stream.header.c
        if c is None:
            c = max((abs(u.example.y) for u in stream.requests), default=1.0) or 1.0
    return gain_kind(args.gain, c)


def _check_rule_args(args):
    if args.k_star < 0 or (args.h_star is not None and args.h_star < 0):
        raise UsageError("--k-star and --h-star must be non-negative")


# ------------------------------------------------------------------ commands
def cmd_run_stream(args):
    _check_rule_args(args)
    stream = read_stream(args.input)
    kind = _kind_for(args, stream)
    n_max = stream.header.n_max or stream.max_active()
    params = FeasibilityParams(args.alpha, args.beta, kind, max(2, n_max), args.k_star, args.h_star)
    eps = args.epsilon if args.epsilon is not None else params.epsilon
    if not 0 < eps < 1:
        raise UsageError("--epsilon must lie in (0, 1)")
    rule = ThresholdRule.for_feasibility(kind, args.alpha, k_star=args.k_star, h_star=args.h_star)
    tau_model = TauModel(override=args.tau) if args.tau is not None else TauModel()
    m = Maintainer(rule, eps, stream.header.d, tau_model=tau_model)
    violations = []
    checks = 0
    every = args.verify_every
    for i, u in enumerate(stream.requests, start=1):
        m.apply(u)
        if every and i % every == 0:
            checks += 1
            for v in check_feasibility(m.tree, m.active, params):
                violations.append({"update": i, **v.as_dict()})
    if every == 0 or len(stream.requests) % every:
        checks += 1
        for v in check_feasibility(m.tree, m.active, params):
            violations.append({"update": len(stream.requests), **v.as_dict()})
    doc = reports.run_report(
        m, source=args.input, epsilon=eps, violations=violations, checks=checks,
        params={"gain": kind.name, "c": kind.c, "alpha": args.alpha, "beta": args.beta,
                "k_star": args.k_star, "h_star": args.h_star, "tau_override": args.tau,
                "verify_every": every})
    out = reports.write_json(args.report, doc)
    reports.write_csv(reports.sibling(out, ".csv", "_ops"),
                      ({"update": i, "ops": o} for i, o in enumerate(m.stats.updates.per_update, 1)),
                      ["update", "ops"])
    if not args.no_plot:
        plotting.plot_ops(m.stats.updates.per_update, reports.sibling(out, ".png", "_ops"))
    bad = len(violations) + len(m.stats.budget_violations)
    print(f"updates={m.n_updates} height={m.height()} max_ops={m.stats.updates.max} "
          f"violations={len(violations)} budget_violations={len(m.stats.budget_violations)}")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_bench_scaling(args):
    if not 0 < args.epsilon < 1:
        raise UsageError("--epsilon must lie in (0, 1)")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    gens = tuple(args.generators.split(","))
    unknown = [g for g in gens if g not in GENERATORS or g == "regression"]
    if unknown:
        raise UsageError(f"unsupported generator(s) {unknown}")
    cfg = bench.BenchConfig(sizes=args.sizes, gain=gain_kind(args.gain), alpha=args.alpha,
                            beta=args.beta, epsilon=args.epsilon, trials=args.trials,
                            seed=args.seed, generators=gens, ratio_bound=args.ratio_bound,
                            decimals=args.decimals)
    doc = bench.bench_scaling(cfg)
    out = reports.write_json(args.report, doc)
    reports.write_csv(reports.sibling(out, ".csv"), doc["table"],
                      ["generator", "n", "max_ops", "ratio", "naive_ops", "naive_ratio"])
    if not args.no_plot:
        plotting.plot_scaling(doc["table"], reports.sibling(out, ".png"))
    for row in doc["table"]:
        print(f"{row['generator']:>12} n={row['n']:>6} max_ops={row['max_ops']:>8} "
              f"ratio={row['ratio']:.3f} naive_ratio={row['naive_ratio']:.3f}")
    return EXIT_OK if doc["passed"] else EXIT_VIOLATION


def _pure_insert_set(stream):
    if any(u.op.value != "ins" for u in stream.requests):
        raise UsageError("build/verify input must be a pure insert stream")
    return stream.final_set()


def cmd_build(args):
    _check_rule_args(args)
    stream = read_stream(args.input)
    kind = _kind_for(args, stream)
    S = _pure_insert_set(stream)
    if len(S) == 0:
        raise UsageError("input stream is empty")
    rule = ThresholdRule(kind, args.alpha, args.k_star, args.h_star)
    tree = greedy_build(rule, S)
    tree.d = stream.header.d
    Path(args.dump).write_text(json.dumps(tree.to_dict(), indent=1, sort_keys=True) + "\n")
    print(f"height={tree.height} vertices={tree.size()}")
    return EXIT_OK


def cmd_verify(args):
    _check_rule_args(args)
    stream = read_stream(args.input)
    kind = _kind_for(args, stream)
    S = _pure_insert_set(stream)
    try:
        tree = DecisionTree.from_json(Path(args.tree).read_text())
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise UsageError(f"cannot load tree dump: {e}") from None
    if tree.d != stream.header.d:
        raise UsageError(f"tree has d={tree.d} but stream has d={stream.header.d}")
    params = FeasibilityParams(args.alpha, args.beta, kind, max(2, len(S)), args.k_star, args.h_star)
    found = check_feasibility(tree, S, params)
    for v in found:
        print(f"vertex {v.vertex} depth {v.depth}: {v.condition}: {v.detail}")
    if args.report:
        reports.write_json(args.report, {"format": "dyntree.verify/1",
                                         "violations": [v.as_dict() for v in found]})
    print(f"violations={len(found)}")
    return EXIT_VIOLATION if found else EXIT_OK


def cmd_generate(args):
    if args.updates < 0 or args.d < 1:
        raise UsageError("--updates must be >= 0 and --d >= 1")
    st = generate(args.kind, args.updates, d=args.d, seed=args.seed, p_insert=args.p_insert,
                  warmup=args.warmup)
    write_stream(st, args.output)
    return EXIT_OK


def cmd_convert_csv(args):
    st = convert_csv(args.csv, args.label_column, args.label_type)
    write_stream(st, args.output)
    return EXIT_OK


# ------------------------------------------------------------------ parser
def build_parser():
    ap = argparse.ArgumentParser(prog="dyntree", description="Fully dynamic decision trees.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-stream", help="maintain a tree over an update stream")
    p.add_argument("--input", required=True)
    _add_rule_args(p)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--verify-every", type=int, default=0,
                   help="check feasibility every M updates (0: final tree only)")
    p.add_argument("--tau", type=int, default=None, help="override the per-pull budget")
    p.add_argument("--report", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_run_stream)

    p = sub.add_parser("bench-scaling", help="max ops per update across sizes")
    p.add_argument("--sizes", type=_sizes, default=bench.DEFAULT_SIZES)
    p.add_argument("--gain", choices=["gini", "info"], default="gini")
    p.add_argument("--alpha", type=_unit, default=0.3)
    p.add_argument("--beta", type=_unit, default=0.3)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generators", default=",".join(bench.DEFAULT_GENERATORS))
    p.add_argument("--ratio-bound", type=float, default=bench.RATIO_BOUND)
    p.add_argument("--decimals", type=int, default=6, help="feature rounding of the generators")
    p.add_argument("--report", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_bench_scaling)

    p = sub.add_parser("build", help="one-shot greedy tree from a pure insert stream")
    p.add_argument("--input", required=True)
    _add_rule_args(p, beta=False)
    p.add_argument("--dump", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="check a tree dump against a stream's final set")
    p.add_argument("--tree", required=True)
    p.add_argument("--input", required=True)
    _add_rule_args(p)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a seeded synthetic stream")
    p.add_argument("--kind", choices=GENERATORS, required=True)
    p.add_argument("--updates", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-insert", type=float, default=0.7)
    p.add_argument("--warmup", type=int, default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("convert-csv", help="CSV with header row to a pure insert stream")
    p.add_argument("--csv", required=True)
    p.add_argument("--label-column", default="-1")
    p.add_argument("--label-type", choices=["class", "real"], default="class")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_convert_csv)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StreamFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except InternalConsistencyError:
        raise
    except (UsageError, DyntreeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
