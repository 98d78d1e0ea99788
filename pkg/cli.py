"""
Command-line entry point for the Λ-atom emission simulator.
Subcommands: spectrum, table1, sweep, compare, verify.

Exit codes: 0 ok, 1 verification failure or phase-table mismatch,
2 configuration / parameter error, 3 oracle non-convergence.
"""

import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from lambda_emission.config import ENV_PREFIX, load_config, parse_assignments, parse_number
from lambda_emission.errors import (ConfigError, ConstraintError, ConvergenceError, DomainError, EmissionError,
                                    ParameterError, TruncationError, VerificationError)
from lambda_emission.verification import LEVELS, run_verification
from simulator import SWEEP_KINDS, TABLE_L2_TOLERANCE, EmissionSimulator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambda-emission",
        description="Spontaneous-emission spectra of a Λ atom driven by a quantized field.",
        epilog=f"Environment variables {ENV_PREFIX}<KEY> override config-file values; --set overrides both.")
    parser.add_argument("--config", help="flat KEY=value scenario file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
    parser.add_argument("--set", dest="assignments", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="warnings only, no progress bars")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("spectrum", help="write <name>.csv and <name>.json for one scenario")
    commands.add_parser("table1", help="phase-equivalence table against the classical references")

    sweep = commands.add_parser("sweep", help="metric vs swept value")
    sweep.add_argument("kind", choices=SWEEP_KINDS)
    sweep.add_argument("--values", required=True, help="comma-separated values (pi expressions allowed)")

    compare = commands.add_parser("compare", help="compare two spectrum CSV files")
    compare.add_argument("a")
    compare.add_argument("b")

    verify = commands.add_parser("verify", help="run the invariant suite")
    verify.add_argument("--level", choices=LEVELS, default="quick")
    verify.add_argument("--trace", metavar="FILE", help="write the full-bath decay curve (t, upper_population) as CSV")
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s', stream=sys.stderr,
                        force=True)


def _sweep_values(text: str) -> List[float]:
    items = [item for item in text.split(",") if item.strip()]
    if not items:
        raise ConfigError("Sweep range is empty")
    return [parse_number(item) for item in items]


def cmd_spectrum(simulator: EmissionSimulator, config) -> int:
    result = simulator.run_scenario(config)
    written = simulator.write_scenario(result, config)
    print(f"✅ Spectrum {config.name}: norm={result.spectrum.norm:.6f}, wrote {', '.join(written)}")
    if result.crosscheck is not None:
        print(f"   oracle max relative deviation {result.crosscheck['max_rel_deviation']:.3g}")
    return EXIT_OK


def cmd_table1(simulator: EmissionSimulator, config) -> int:
    result = simulator.table1(config)
    for row in result.letters:
        print("   " + " ".join(letter or "?" for letter in row))
    if not result.passed:
        if result.letters != result.expected:
            print(f"❌ Phase table mismatch (expected {result.expected})")
        else:
            print(f"❌ Worst l2_rel {result.worst_l2:.4f} exceeds {TABLE_L2_TOLERANCE}")
        return EXIT_FAILED
    print(f"✅ Phase table matches, worst l2_rel {result.worst_l2:.4f}")
    return EXIT_OK


def cmd_sweep(simulator: EmissionSimulator, config, kind: str, values: str) -> int:
    rows = simulator.sweep(kind, _sweep_values(values), config)
    print(f"✅ Sweep {kind}: {len(rows)} points written to {config.out}/sweep_{kind}.csv")
    return EXIT_OK


def cmd_compare(simulator: EmissionSimulator, config, a: str, b: str) -> int:
    report = simulator.compare(a, b, config.out, config.dip_window, config.record())
    print(f"✅ l2_rel={report.l2_rel:.6g} sup_rel={report.sup_rel:.6g}")
    return EXIT_OK


def cmd_verify(threads: int, level: str, trace: Optional[str] = None) -> int:
    if trace and level != "full":
        logger.warning("--trace only applies to the full tier; no trace written")
    results = run_verification(level, threads, trace)
    print(f"✅ {len(results)} checks passed ({level})")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    load_dotenv(override=False)

    try:
        overrides = parse_assignments(args.assignments)
        if args.out is not None:
            overrides["out"] = args.out
        if args.threads is not None:
            overrides["threads"] = str(args.threads)
        config = load_config(args.config, overrides)

        if args.command == "verify":
            return cmd_verify(config.threads, args.level, args.trace)
        simulator = EmissionSimulator(config.threads, progress=not args.quiet)
        logger.debug(f"Simulator: {simulator.get_simulator_info()}")
        if args.command == "spectrum":
            return cmd_spectrum(simulator, config)
        if args.command == "table1":
            return cmd_table1(simulator, config)
        if args.command == "sweep":
            return cmd_sweep(simulator, config, args.kind, args.values)
        if args.command == "compare":
            return cmd_compare(simulator, config, args.a, args.b)
    except VerificationError as e:
        logger.error(f"❌ Verification failed: {e}")
        return EXIT_FAILED
    except ConvergenceError as e:
        logger.error(f"❌ Oracle did not converge: {e}")
        return EXIT_CONVERGENCE
    except (ConfigError, ParameterError, DomainError, ConstraintError, TruncationError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_CONFIG
    except EmissionError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_CONFIG
    parser.error(f"Unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
