"""Command-line entry point: ``levy-spde-lab <experiment> --config FILE``.

Exit codes: 0 all checks pass, 2 any check failed, 3 inconclusive only,
1 runtime or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import run_experiment
from .spectral import BlowUpError

log = logging.getLogger("levy_spde_lab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levy-spde-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config with model/run/experiment blocks")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides run.seed)")
        p.add_argument("--out", default=f"out/{name}", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="curve file format")
        p.add_argument("-q", "--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        log.error("--seed must be an unsigned 64-bit integer")
        return 1
    try:
        cfg = load_config(args.config, args.experiment, args.seed)
        report = run_experiment(cfg, threads=max(1, args.threads))
        report.write(args.out, args.format)
    except (ConfigError, BlowUpError, OSError) as exc:
        log.error("error: %s", exc)
        return 1
    for line in report.summary_lines():
        log.info(line)
    log.info("wrote %s", ", ".join(report.artifacts))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
