"""Command-line entry point: ``scalelab <subcommand> [options]``.

Exit status is 0 when every gate passes, 1 when any check fails or errors,
and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import CHECKS, ConfigError, RunConfig, _floats, apply_env, load_config
from .report import emit, exit_status, run

SUBCOMMANDS = {
    "homogeneity": ["homogeneity"],
    "invariance": ["invariance"],
    "representation": ["euler", "representation"],
    "pde-residuals": ["pde"],
    "box-invariance": ["box"],
    "forms": ["forms"],
    "all": list(CHECKS),
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file; flags override its values")
    common.add_argument("--functional", action="append",
                        help="ne, ext(z=...), hartree, tf or vw; repeat or comma-separate")
    common.add_argument("--density", action="append",
                        help="density such as gaussian:alpha=1,n=1; repeat for several")
    common.add_argument("--m", help="comma-separated scaling degrees")
    common.add_argument("--lambdas", help="comma-separated scaling strengths")
    common.add_argument("--representation-m", help="degrees for the Euler/representation checks")
    common.add_argument("--box-lambdas", help="strengths for the box-invariance check")
    common.add_argument("--checks", help="comma-separated subset (only with 'all')")
    common.add_argument("--seed", type=int)
    common.add_argument("--points", type=int, help="sample points per pointwise check")
    common.add_argument("--pairs", type=int, help="point pairs for the two-point check")
    common.add_argument("--boxes", type=int, help="random boxes for the box check")
    common.add_argument("--panels", type=int)
    common.add_argument("--nodes-per-panel", type=int)
    common.add_argument("--r-max", type=float)
    common.add_argument("--box-nodes", type=int)
    common.add_argument("--box-panels", type=int)
    common.add_argument("--tail-tolerance", type=float)
    common.add_argument("--out", help="JSON report path")
    common.add_argument("--csv", help="CSV sweep path")
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="scalelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _split_functionals(values):
    out = []
    for v in values:
        # commas inside ext(z=...) never occur, so a plain split is safe
        out.extend(x.strip() for x in v.split(",") if x.strip())
    return out


def build_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = apply_env(cfg)
    if args.functional:
        cfg.functionals = _split_functionals(args.functional)
    if args.density:
        cfg.densities = list(args.density)
    if args.m:
        cfg.m_set = _floats(args.m, "--m")
    if args.lambdas:
        cfg.lambda_set = _floats(args.lambdas, "--lambdas")
    if args.representation_m:
        cfg.representation_m = _floats(args.representation_m, "--representation-m")
    if args.box_lambdas:
        cfg.box_lambdas = _floats(args.box_lambdas, "--box-lambdas")
    if args.seed is not None:
        cfg.seed = args.seed
    for key in ("points", "pairs", "boxes"):
        if getattr(args, key) is not None:
            setattr(cfg, key, getattr(args, key))
    for key in ("panels", "nodes_per_panel", "r_max", "box_nodes", "box_panels", "tail_tolerance"):
        val = getattr(args, key)
        if val is not None:
            cfg.quadrature[key] = val
    if args.command == "all":
        if args.checks is not None:
            cfg.checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    else:
        if args.checks is not None:
            raise ConfigError("--checks is only accepted by the 'all' subcommand")
        cfg.checks = list(SUBCOMMANDS[args.command])
    if args.out:
        cfg.json_out = args.out
    if args.csv:
        cfg.csv_out = args.csv
    return cfg.validate()


def _print_summary(report, out):
    for section in ("homogeneity", "invariance", "euler", "representation", "pde_residuals",
                    "box_invariance", "forms"):
        entries = report[section]
        if not entries:
            continue
        ok = sum(e["passed"] for e in entries)
        err = sum(e["status"] == "error" for e in entries)
        status = "PASS" if ok == len(entries) else "FAIL"
        print(f"{status} {section}: {ok}/{len(entries)} passed, {err} errored", file=out)
        for e in entries:
            if not e["passed"]:
                what = ", ".join(f"{k}={e[k]}" for k in ("functional", "density", "m", "lambda") if k in e)
                print(f"    failed: {what} {e.get('error', '')}".rstrip(), file=out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"scalelab: config error: {exc}", file=sys.stderr)
        return 2
    report, rows = run(cfg)
    try:
        emit(report, cfg.json_out, cfg.csv_out, rows)
    except OSError as exc:
        print(f"scalelab: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        _print_summary(report, sys.stdout)
    return exit_status(report)


if __name__ == "__main__":
    sys.exit(main())
