#!/usr/bin/env python3
"""
Command-line runner for quantum Lyapunov experiments on the 2-torus

    python run_simulation.py run configs/cat_kick.yaml
    python run_simulation.py sweep configs/cos_kick_alpha_sweep.yaml --workers 3
    python run_simulation.py spectrum configs/free_spectrum.yaml
    python run_simulation.py check
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from src import __version__
from src.dynamics.kicks import CAT_ORIENTATIONS
from src.experiment.checks import CHECK_CONFIG, print_check_table, run_checks, write_checks
from src.experiment.config_loader import ExperimentConfig, load_config
from src.experiment.runner import (
    EXIT_FAILURE,
    EXIT_OK,
    ExperimentRunner,
    exit_code_for,
    write_error_report,
)
from src.utils.errors import LyapunovError

DEFAULT_OUT_DIR = "results"
LOG_FILE = "lyapunov_run.log"

logger = logging.getLogger(__name__)


def setup_logging(out_dir: str, verbose: bool = False):
    os.makedirs(out_dir, exist_ok=True)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(os.path.join(out_dir, LOG_FILE)),
            logging.StreamHandler(),
        ],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Quantum Lyapunov growth of Heisenberg observables for kicked torus systems"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=None, help="output directory (default: output.dir of the config)")
    common.add_argument("--plot", action=argparse.BooleanOptionalAction, default=None,
                        help="write SVG charts (default: output.plot of the config)")
    common.add_argument("--verbose", action="store_true", help="debug-level logging")

    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", parents=[common], help="run one experiment config")
    run_parser.add_argument("config", help="path to a YAML experiment config")

    sweep_parser = subparsers.add_parser("sweep", parents=[common], help="run every point of a sweep block")
    sweep_parser.add_argument("config", help="path to a YAML experiment config with a sweep block")
    sweep_parser.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    spectrum_parser = subparsers.add_parser("spectrum", parents=[common], help="spectral analysis of U_F")
    spectrum_parser.add_argument("config", help="path to a YAML experiment config")

    check_parser = subparsers.add_parser("check", parents=[common], help="run the invariant suite")
    check_parser.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    check_parser.add_argument("--corrupt-cat-orientation", choices=CAT_ORIENTATIONS, default=None,
                              help="force a cat kick orientation (negative test of the Heisenberg check)")
    return parser


def _run_command(args, config: Optional[ExperimentConfig], out_dir: str) -> int:
    if args.command == "check":
        seed = CHECK_CONFIG["seed"] if args.seed is None else args.seed
        results = run_checks(seed=seed, corrupt_cat_orientation=args.corrupt_cat_orientation)
        print_check_table(results)
        write_checks(out_dir, results, seed=seed)
        return EXIT_OK if all(result.passed for result in results) else EXIT_FAILURE

    runner = ExperimentRunner(
        config, out_dir=out_dir, plot=args.plot, workers=getattr(args, "workers", 1), log_file=LOG_FILE
    )
    if args.command == "run":
        runner.run()
    elif args.command == "sweep":
        runner.sweep()
    else:
        result = runner.spectrum()
        print("\n" + "=" * 60)
        print(f"SPECTRUM: {config.name}")
        print("=" * 60)
        print(f"  Dimension: {result['dimension']}")
        print(f"  Eigenbasis defect: {result['defect']:.3g}")
        print(f"  Reconstruction error (n <= {result['reconstruction']['n_max']}): "
              f"{result['reconstruction']['max_relative_error']:.3g}")
        print("=" * 60)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)

    config = None
    load_error = None
    if args.command != "check":
        try:
            config = load_config(args.config)
        except LyapunovError as e:
            load_error = e

    out_dir = args.out_dir or (config.output["dir"] if config is not None else DEFAULT_OUT_DIR)
    setup_logging(out_dir, args.verbose)

    if load_error is not None:
        logger.error(f"Invalid config {args.config}: {load_error}")
        write_error_report(out_dir, load_error)
        return exit_code_for(load_error)

    try:
        return _run_command(args, config, out_dir)
    except LyapunovError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        write_error_report(out_dir, e)
        return exit_code_for(e)
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        write_error_report(out_dir, e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
