"""Command-line harness.

Exit codes: 0 all checks pass, 1 an acceptance check failed, 2 invalid
configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import DESCRIPTIONS, KINDS, build_config, load_config
from .errors import ConfigurationError, NumericalError
from .report import write_report
from .runners import run, stem

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("homothetic")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="homothetic", description="Run homothetic Hodge and penalization experiments.")
    ap.add_argument("--list", action="store_true", help="list the built-in validation suites and exit")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="kind", metavar="KIND")
    for kind in KINDS:
        sp = sub.add_parser(kind, help=DESCRIPTIONS[kind], description=DESCRIPTIONS[kind])
        sp.add_argument("--config", help="YAML config file (defaults are used for missing keys)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.list:
        for kind in KINDS:
            print(f"{kind:<15} {DESCRIPTIONS[kind]}")
        return EXIT_OK
    if args.kind is None:
        ap.print_usage(sys.stderr)
        print("error: an experiment kind is required (see --list)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.kind) if args.config else build_config({}, args.kind)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s with seed %d", cfg.kind, cfg.seed)
    try:
        report = run(cfg)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out_dir = os.path.join(cfg.out, cfg.kind)
    files = write_report(report, out_dir, stem(cfg))
    sys.stdout.write(report.render())
    log.info("wrote %s", ", ".join(os.path.join(out_dir, f) for f in files.values()))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
