"""Command line front end: run experiments, run the acceptance suite,
print the config schema.

Exit codes: 0 success, 2 config error, 3 certificate failure, 4 numeric
failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from .config import Config, ConfigError, schema_text
from .errors import (
    BoundaryFitError,
    FreqlabError,
    MapQualityError,
    PipelineStageError,
    SelfCheckError,
    WorkingBallError,
)
from .experiments import DEMO_CONFIGS, run_experiment
from .verify import CRITERIA, DEFAULT_QUAD_TOL, verify_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3
EXIT_NUMERIC = 4

# subclasses of the broad numeric families that signal a failed
# certificate rather than a failed computation; matched first
_CERTIFICATE_ERRORS = (PipelineStageError, MapQualityError, SelfCheckError,
                       BoundaryFitError, WorkingBallError)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="freqlab",
        description="numerical experiments for frequency functions on "
                    "graph domains")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config")
    run.add_argument("config",
                     help="path to a key-value config file, or the name of "
                          "a builtin experiment "
                          f"({', '.join(sorted(DEMO_CONFIGS))})")
    run.add_argument("--out", default=None, metavar="DIR",
                     help="output directory (overrides out.dir)")
    run.add_argument("--plot", action="store_true",
                     help="also write SVG plots")
    run.add_argument("--seed", type=int, default=None, metavar="N",
                     help="override the config seed")
    run.add_argument("--quad-tol", type=float, default=None, metavar="X",
                     help="override quad.tol")
    run.add_argument("--epsilon", type=float, default=None, metavar="X",
                     help="override field.epsilon")

    ver = sub.add_parser("verify-all", help="run the acceptance suite")
    ver.add_argument("--out", default=None, metavar="DIR",
                     help="directory for suite artifact CSVs")
    ver.add_argument("--plot", action="store_true",
                     help="accepted for symmetry; the suite writes no plots")
    ver.add_argument("--seed", type=int, default=0, metavar="N",
                     help="seed for randomized samples")
    ver.add_argument("--quad-tol", type=float, default=None, metavar="X",
                     help="quadrature tolerance for the suite "
                          f"(default {DEFAULT_QUAD_TOL:g}; loosening it "
                          "100x or more downgrades monotonicity criteria "
                          "to WARN)")
    ver.add_argument("--fixtures", default=None, metavar="LIST",
                     help="comma-separated criterion numbers or names; "
                          "an empty value yields a NOOP report")

    sub.add_parser("schema", help="print the config schema and CSV layouts")
    return ap


def _load_config(arg: str) -> Config:
    if os.path.exists(arg):
        with open(arg, "r", encoding="utf-8") as fh:
            return Config.from_text(fh.read())
    if arg in DEMO_CONFIGS:
        return Config.from_text(DEMO_CONFIGS[arg])
    raise ConfigError(
        f"no config file {arg!r} and no builtin experiment of that name "
        f"(builtin: {', '.join(sorted(DEMO_CONFIGS))})")


def _parse_fixtures(raw: Optional[str]) -> Optional[List[int]]:
    """Map the --fixtures value to a criterion-number list.

    None means the full suite; an empty string is an explicit request
    for nothing, which verify_all reports as NOOP.
    """
    if raw is None:
        return None
    tokens = [t.strip() for t in raw.split(",") if t.strip()]
    by_name = {name: num for num, name, *_ in CRITERIA}
    known = {num for num, *_ in CRITERIA}
    out: List[int] = []
    for tok in tokens:
        if tok in by_name:
            out.append(by_name[tok])
        else:
            try:
                num = int(tok)
            except ValueError:
                raise ConfigError(f"unknown criterion {tok!r}") from None
            if num not in known:
                raise ConfigError(f"unknown criterion number {num}")
            out.append(num)
    return out


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.override("seed", str(args.seed))
    if args.quad_tol is not None:
        cfg.override("quad.tol", repr(args.quad_tol))
    if args.epsilon is not None:
        cfg.override("field.epsilon", repr(args.epsilon))
    outdir = args.out if args.out is not None else cfg.get("out.dir")
    result = run_experiment(cfg, outdir, plot=args.plot)
    print(result.report())
    return EXIT_OK if result.passed else EXIT_CERTIFICATE


def _cmd_verify_all(args: argparse.Namespace) -> int:
    only = _parse_fixtures(args.fixtures)
    report = verify_all(outdir=args.out, seed=args.seed,
                        quad_tol=args.quad_tol, only=only)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.all_ok else EXIT_CERTIFICATE


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify-all":
            return _cmd_verify_all(args)
        print(schema_text(), end="")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _CERTIFICATE_ERRORS as exc:
        print(f"certificate failure [{type(exc).__name__}]: {exc}",
              file=sys.stderr)
        return EXIT_CERTIFICATE
    except (FreqlabError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure [{type(exc).__name__}]: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
