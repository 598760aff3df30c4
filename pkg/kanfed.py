#!/usr/bin/env python
"""
KANFED - Federated KAN Experiment Runner

Simulates federated training of Kolmogorov-Arnold Networks whose spline grids
grow on a schedule, with uploads sparsified to a hard per-round bit budget.

Usage:
    python kanfed.py run --config config/config.yaml --desk-scale
    python kanfed.py sweep --config config/config.yaml --desk-scale --jobs 4
    python kanfed.py verify-bound --trials 10000 --g-max 8 --o-max 3
    python kanfed.py codec-bench --g 10 --o 3 --draws 500

Exit codes: 0 success, 2 configuration error, 3 bound verification failure.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Load environment variables from .env file
from dotenv import load_dotenv
load_dotenv()

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.compression import CompressionError
from src.runner import (
    ConfigError,
    cmd_codec_bench,
    cmd_run,
    cmd_sweep,
    cmd_verify_bound,
    configure_logging,
    load_config
)


EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_VERIFICATION_FAILED = 3


def _add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="YAML experiment configuration (default: embedded defaults)"
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Master seed; overrides experiment.seed"
    )
    parser.add_argument(
        "--out-dir",
        type=str,
        default=None,
        help="Output directory (default: $KANFED_OUTPUT_DIR or ./runs)"
    )
    parser.add_argument(
        "--desk-scale",
        action="store_true",
        help="Apply the desk-scale preset (N=20, T=200, T_p=50, 3000/500 samples)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="KANFED - federated KAN training with grid extension and budgeted uploads",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python kanfed.py run --desk-scale                       # Desk-scale compressed run
  python kanfed.py run --config my.yaml --seed 3          # Custom configuration
  python kanfed.py sweep --desk-scale --jobs 4            # Desk-scale sweep
  python kanfed.py verify-bound --trials 10000            # Error bound check
  python kanfed.py codec-bench --draws 500                # Sparsifier comparison table
        """
    )
    parser.add_argument(
        "--log-level",
        type=str,
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Override the configured log level"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run one federated experiment")
    _add_experiment_arguments(run)

    sweep = subparsers.add_parser("sweep", help="Run the benchmark x alpha x mode x seed grid")
    _add_experiment_arguments(sweep)
    sweep.add_argument("--jobs", type=int, default=1, help="Parallel sweep cells (default: 1)")

    bound = subparsers.add_parser("verify-bound", help="Randomised top-k versus optimal error check")
    bound.add_argument("--trials", type=int, default=10000, help="Number of trials (default: 10000)")
    bound.add_argument("--g-max", type=int, default=8, help="Largest grid size (default: 8)")
    bound.add_argument("--o-max", type=int, default=3, help="Largest spline order (default: 3)")
    bound.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")

    bench = subparsers.add_parser("codec-bench", help="Sparsification error versus retained ratio")
    bench.add_argument("--g", type=int, default=10, help="Grid size (default: 10)")
    bench.add_argument("--o", type=int, default=3, help="Spline order (default: 3)")
    bench.add_argument(
        "--ratios",
        type=str,
        default=None,
        help="Comma-separated ratios (default: 0.0,0.1,...,1.0)"
    )
    bench.add_argument("--draws", type=int, default=500, help="Random coefficient draws per ratio (default: 500)")
    bench.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    bench.add_argument("--out-dir", type=str, default=None, help="Directory for codec_bench.csv")

    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["experiment"] = {"seed": args.seed}
    if args.out_dir is not None:
        overrides["output"] = {"dir": args.out_dir}
    return overrides


def _parse_ratios(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError("ratios", f"not a comma-separated list of numbers: {text}") from e


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)

    try:
        if args.command in ("run", "sweep"):
            cfg = load_config(args.config, desk_scale=args.desk_scale, overrides=_overrides(args))
            configure_logging(cfg.logging, args.log_level)
            if args.command == "run":
                outcome = cmd_run(cfg)
                print(f"final rmse: {outcome.result.final_rmse:.6e}")
                print(f"output: {outcome.run_dir}")
            else:
                cmd_sweep(cfg, jobs=args.jobs)
            return EXIT_OK

        configure_logging(level=args.log_level)
        if args.command == "verify-bound":
            report = cmd_verify_bound(args.trials, args.g_max, args.o_max, args.seed)
            return EXIT_OK if report.passed else EXIT_VERIFICATION_FAILED

        ratios = _parse_ratios(args.ratios)
        kwargs: Dict[str, Any] = {"g": args.g, "o": args.o, "draws": args.draws, "seed": args.seed}
        if ratios is not None:
            kwargs["ratios"] = ratios
        if args.out_dir is not None:
            kwargs["out_dir"] = Path(args.out_dir)
        cmd_codec_bench(**kwargs)
        return EXIT_OK

    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except CompressionError as e:
        print(f"Invalid arguments: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
