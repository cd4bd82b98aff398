"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 1 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import reporting
from .analysis import SCENARIOS
from .config import ExperimentConfig, default_config_yaml, load_config
from .errors import ConfigError
from .experiment import reproduce_paper, run_calibration, run_scenario, thread_cap

log = logging.getLogger("oam_eraser")


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment config (defaults if omitted)")
    common.add_argument("--seed", type=_u64, help="root RNG seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="oam-eraser",
                                description="OAM phase-structure quantum eraser simulator")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("calibrate", parents=[common], help="sweep the shifted-SPP offset with the field oracle")
    sw = sub.add_parser("sweep", parents=[common], help="phase sweep for one scenario")
    sw.add_argument("--scenario", required=True, choices=SCENARIOS)
    sw.add_argument("--analytic", action="store_true", help="skip Monte Carlo; use expected counts")
    sub.add_parser("reproduce-paper", parents=[common],
                   help="calibration, all scenarios and the visibility fit in one report")
    sub.add_parser("print-default-config", help="dump the full default config as YAML")
    return p


def _effective_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "print-default-config":
        sys.stdout.write(default_config_yaml())
        return 0
    try:
        cfg = _effective_config(args)
    except ConfigError as exc:
        where = f"{args.config}: " if args.config else ""
        print(f"config error: {where}{exc}", file=sys.stderr)
        return 2

    out_dir = Path(cfg.out_dir)
    workers = thread_cap()
    try:
        if args.command == "calibrate":
            report = run_calibration(cfg, workers)
            for path in reporting.write_calibration(report, out_dir):
                print(path)
            if report.warning:
                print(f"warning: {report.warning}", file=sys.stderr)
        elif args.command == "sweep":
            result, ref = run_scenario(cfg, args.scenario, analytic=args.analytic, workers=workers)
            for path in reporting.write_sweep(result, out_dir, ref):
                print(path)
        elif args.command == "reproduce-paper":
            reproduce_paper(cfg, out_dir, workers)
            print(out_dir / "reproduction_report.txt")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
