"""Command-line interface: run scenarios, sweep figures, validate results.

Exit codes: 0 on success, 2 when a scenario is infeasible or a stored result
fails validation, 3 on configuration errors.
"""
from __future__ import annotations

import argparse
import os
import sys

from ..errors import ConfigError, DualbandError
from .config import (ScenarioConfig, config_hash, load_config, parse_config,
                     with_overrides)
from .figures import FIGURE_IDS, run_figure
from .runner import (RunResult, dump_channel, run_and_write, run_dual_band,
                     validate_run, write_csv)

__all__ = [
    "ScenarioConfig", "config_hash", "load_config", "parse_config",
    "with_overrides", "FIGURE_IDS", "run_figure", "RunResult", "dump_channel",
    "run_and_write", "run_dual_band", "validate_run", "write_csv", "main",
]

OUT_DIR_ENV = "DUALBAND_OUT"

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualband",
        description="Dual-band reconfigurable-array beamforming designer")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="scenario file")
        p.add_argument("--out", default=None,
                       help=f"output directory (default ${OUT_DIR_ENV} or "
                            "./out)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sweeps")

    p_run = sub.add_parser("run", help="one seeded dual-band design")
    common(p_run)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the first configured seed")

    p_fig = sub.add_parser("figure", help="seed-averaged sweep for one figure")
    common(p_fig)
    p_fig.add_argument("--figure", required=True, choices=FIGURE_IDS)

    p_val = sub.add_parser("validate", help="re-check a stored run directory")
    p_val.add_argument("--out", required=True, help="run directory to check")

    p_dump = sub.add_parser("dump-channel", help="write one seeded channel set")
    common(p_dump)
    p_dump.add_argument("--seed", type=int, default=None,
                        help="override the first configured seed")
    return parser


def _out_dir(args) -> str:
    if args.out:
        return args.out
    return os.environ.get(OUT_DIR_ENV, "out")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "validate":
            problems = validate_run(args.out)
            for msg in problems:
                print(f"validate: {msg}", file=sys.stderr)
            if problems:
                return EXIT_INFEASIBLE
            print(f"validate: {args.out} ok")
            return EXIT_OK

        cfg = load_config(args.config)
        if args.verb == "run":
            seed = args.seed if args.seed is not None else cfg.seeds[0]
            out = _out_dir(args)
            run_and_write(cfg, seed, out)
            print(f"run: seed {seed} written to {out}")
            return EXIT_OK
        if args.verb == "figure":
            out = _out_dir(args)
            files = run_figure(cfg, args.figure, out)
            print(f"figure: {args.figure} wrote {', '.join(files)} in {out}")
            return EXIT_OK
        if args.verb == "dump-channel":
            seed = args.seed if args.seed is not None else cfg.seeds[0]
            out = _out_dir(args)
            os.makedirs(out, exist_ok=True)
            path = os.path.join(out, f"channels_seed{seed}.json")
            dump_channel(cfg, seed, path)
            print(f"dump-channel: wrote {path}")
            return EXIT_OK
        raise ConfigError(f"unknown verb '{args.verb}'")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DualbandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
