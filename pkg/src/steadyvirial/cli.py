"""
Command line entry point.

    steadyvirial build --model ev --config run.json
    steadyvirial scan  --model ev --config scan.json --format csv --out rows.csv
    steadyvirial check --model nv

``build`` writes the report of one static state, ``scan`` writes one row per
scan value, and ``check`` prints a pass/fail line per inequality. All three
share the exit codes 0 (every check passed), 1 (an inequality was violated)
and 2 (bad configuration, I/O error, or every build failed).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

from .ansatz import MODELS
from .config import ConfigError, RunConfig, from_dict, load_config
from .scan import (EXIT_FAILURE, ScanResult, emit, exit_code, run_from_config)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="steadyvirial",
                                description="Static kinetic steady states and "
                                            "their virial identities and bounds.")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (("build", "build one static state and write its report"),
                       ("scan", "scan a central or ansatz parameter"),
                       ("check", "run the inequality suite and set the exit code")):
        q = sub.add_parser(verb, help=text)
        q.add_argument("--model", choices=MODELS,
                       help="model; must match the config when both are given")
        q.add_argument("--config", help="JSON run configuration")
        q.add_argument("--format", choices=("csv", "json"),
                       help="override output.format")
        q.add_argument("--out", help="override output.path ('-' for stdout)")
    return p


def _load(args) -> RunConfig:
    if args.config is None:
        if args.model is None:
            raise ConfigError("give --model or --config")
        return from_dict({"model": args.model})
    return load_config(args.config, args.model)


def _print_checks(result, out):
    if isinstance(result, ScanResult):
        for r in result.rows:
            status = "FAIL" if r.failed or not r.checks_passed else "ok"
            note = r.failure or ", ".join(k for k, v in r.margins.items() if v < 0)
            out.write(f"{status:4s} {result.param}={r.param:.6g} {note}\n")
        if result.argmax_binding is not None:
            best = result.rows[result.argmax_binding]
            out.write(f"max binding {best.binding:.6g} at {result.param}={best.param:.6g}\n")
        return
    rep = result
    if rep.failure:
        out.write(f"FAIL build: {rep.failure}\n")
        return
    for c in rep.checks:
        status = "skip" if c.trivial else ("ok" if c.passed else "FAIL")
        out.write(f"{status:4s} {c.name}: lhs={c.lhs:.6g} rhs={c.rhs:.6g} "
                  f"margin={c.margin:.3g}\n")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    if args.verb == "build":
        cfg = replace(cfg, scan=None)
    elif args.verb == "scan" and cfg.scan is None:
        print("config error: scan verb needs a 'scan' section", file=sys.stderr)
        return EXIT_FAILURE

    result = run_from_config(cfg)
    code = exit_code(result)
    fmt = args.format or cfg.output.format
    path = args.out if args.out is not None else cfg.output.path
    if path == "-":
        path = None

    if args.verb == "check":
        _print_checks(result, sys.stdout)
        if args.out is None and cfg.output.path is None:
            return code
    elif args.verb == "build" and fmt == "csv" and args.format is None \
            and cfg.output.path is None:
        fmt = "json"  # a bare build prints the full report
    try:
        param = cfg.central if cfg.central is not None else math.nan
        emit(result, fmt, path, param=param)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if isinstance(result, ScanResult):
        for r in result.rows:
            if r.failed:
                print(f"build failed at {result.param}={r.param:.6g}: {r.failure}",
                      file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
