"""``simulate`` command line entry point.

Exit codes: 0 success, 1 configuration error, 2 property-check failure.
"""
import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiments import run

log = logging.getLogger("selfnorm")


def build_parser():
    p = argparse.ArgumentParser(prog="simulate", description=__doc__.splitlines()[0])
    p.add_argument("config", help="path to a TOML experiment config")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="output directory for CSV tables, traces and summary.json")
    p.add_argument("--reps", type=int, help="override the replication count")
    p.add_argument("--jobs", type=int, help="worker threads for replications (results do not depend on it)")
    p.add_argument("--quiet", action="store_true", help="do not print the summary")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(
            seed=args.seed, out=args.out, reps=args.reps, jobs=args.jobs
        )
        report = run(cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    if cfg.out is not None:
        report.write(cfg.out)
    if not args.quiet:
        print(report.summary_json())
    for msg in report.failures:
        log.error("%s", msg)
    return 0 if report.ok else 2


if __name__ == "__main__":
    sys.exit(main())
