#!/usr/bin/env python3
"""
epflow - Radial Euler-Poincare Flow Lab

Command-line entry point. Simulates the radial flow from a configuration
file, runs named verification suites, runs parameter sweeps and compares
the Helmholtz solver against kernel quadrature.

Usage:
    python3 scripts/epflow/epflow.py simulate configs/thm13.env
    python3 scripts/epflow/epflow.py verify identity510
    python3 scripts/epflow/epflow.py sweep configs/sweep.env
    python3 scripts/epflow/epflow.py oracle-check

Exit codes:
    0   success (horizon reached or blowup detected; all checks passed)
    1   usage or configuration error
    2   numerical failure (fault, step underflow, failed checks)

Environment Variables:
    EPFLOW_OUT          Overrides the configured output directory
    EPFLOW_LOG_LEVEL    Initial logging level (default: INFO)
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from common_utils import banner, setup_logging
from config import (
    VERSION,
    apply_env_overrides,
    load_run_config,
    load_sweep_config,
)
from dynamics import SimState, TerminationReason, evolve
from errors import ConfigError, EpflowError, NumericalError, ParameterError
from grid import make_grid
from outputs import write_run
from scenarios import build_initial_data
from sweep import run_sweep, write_phase_csv
from verify_suites import available_suites, log_results_table, oracle_results, run_suite

logger = logging.getLogger(__name__)

ENV_EPFLOW_LOG_LEVEL = "EPFLOW_LOG_LEVEL"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

SUCCESS_REASONS = (TerminationReason.HORIZON_REACHED, TerminationReason.BLOWUP_DETECTED)


def cmd_simulate(config_path: Path) -> int:
    """Run one simulation and write its artifacts."""
    try:
        config = apply_env_overrides(load_run_config(config_path))
        grid = make_grid(config.grid.d, config.grid.r_max, config.grid.n)
        phi0, family = build_initial_data(config.scenario, grid)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except ParameterError as e:
        logger.error(f"❌ Invalid parameters in {config_path}: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"❌ Initial data construction failed: {e}")
        return EXIT_NUMERICAL

    banner(f"Simulating {config.scenario.kind.value} (d={grid.d}, n={grid.n}, r_max={grid.r_max:g})")
    trajectory, report = evolve(SimState(phi0, 0.0), config.control, config.outputs.snapshot_every or None)

    extra = None
    if family is not None:
        extra = {
            "family": {
                "t0": family.t0,
                "speed_bound": family.speed_bound,
                "retries": family.retries,
                "phi0_origin": family.phi0_origin,
                "max_value": family.max_value,
                "max_radius": family.max_radius,
            }
        }
    try:
        directory = write_run(config, trajectory, report, grid, extra)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"❌ Could not write run outputs: {e}")
        return EXIT_CONFIG

    logger.info(f"Termination: {report.reason.value} at t={report.t_end:.6g} after {report.steps} steps")
    if report.t_star_estimate is not None:
        estimate = report.t_star_estimate
        logger.info(f"Blowup time estimate: {estimate.value:.6g} +/- {estimate.uncertainty:.2g}")
    logger.info(f"Artifacts in {directory}")

    if report.reason in SUCCESS_REASONS:
        logger.info("✅ Simulation completed")
        return EXIT_OK
    logger.error(f"❌ Simulation ended with {report.reason.value}: {report.message}")
    return EXIT_NUMERICAL


def cmd_verify(suite_name: str) -> int:
    """Run a named verification suite; exit 0 iff every check passes."""
    if suite_name not in available_suites():
        logger.error(f"❌ Unknown suite: {suite_name}")
        logger.info(f"Available suites: {', '.join(available_suites())}")
        return EXIT_CONFIG
    results = run_suite(suite_name)
    return EXIT_OK if log_results_table(suite_name, results) else EXIT_NUMERICAL


def cmd_sweep(config_path: Path) -> int:
    """Run every sweep cell and write phase.csv."""
    try:
        sweep = load_sweep_config(config_path)
        base = apply_env_overrides(sweep.base)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG

    banner(f"Sweep from {config_path}")
    results = run_sweep(sweep)
    try:
        write_phase_csv(Path(base.outputs.directory), results)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG

    failed = sum(1 for result in results if result.reason == "Error")
    if failed:
        logger.warning(f"⚠️  {failed} of {len(results)} cell(s) failed; see the error column")
    logger.info("✅ Sweep completed")
    return EXIT_OK


def cmd_oracle_check() -> int:
    """Compare solver g(0) with kernel quadrature for fixed fields in d = 1, 2, 3."""
    banner("Helmholtz oracle check")
    try:
        results = oracle_results()
    except EpflowError as e:
        logger.error(f"❌ Oracle check failed: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK if log_results_table("oracle-check", results) else EXIT_NUMERICAL


def _initial_log_level() -> int:
    name = os.environ.get(ENV_EPFLOW_LOG_LEVEL, "INFO").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epflow",
        description="Radial Euler-Poincare flow lab",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
Examples:
  epflow simulate configs/thm13.env
  epflow verify identity510
  epflow sweep configs/sweep.env
  epflow oracle-check

Suites: {', '.join(available_suites())}
        """,
    )
    parser.add_argument("--version", action="version", version=f"epflow {VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    simulate_parser = subparsers.add_parser("simulate", help="Run one simulation from a config file")
    simulate_parser.add_argument("config", type=Path, help="Run configuration (.env)")

    verify_parser = subparsers.add_parser("verify", help="Run a named verification suite")
    verify_parser.add_argument("suite", help="Suite name")

    sweep_parser = subparsers.add_parser("sweep", help="Run a parameter sweep")
    sweep_parser.add_argument("config", type=Path, help="Sweep configuration (.env)")

    subparsers.add_parser("oracle-check", help="Compare Helmholtz solver and kernel quadrature")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    setup_logging(_initial_log_level())
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    if args.command == "simulate":
        return cmd_simulate(args.config)
    if args.command == "verify":
        return cmd_verify(args.suite)
    if args.command == "sweep":
        return cmd_sweep(args.config)
    if args.command == "oracle-check":
        return cmd_oracle_check()

    logger.error(f"Unknown command: {args.command}")
    parser.print_help()
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
