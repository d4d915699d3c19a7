"""Command-line entry point for the assortment-visibility tools."""

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .config import Config, create_default_config, load_config
from .errors import AssortmentError
from .reports import (
    fees_document,
    generate_instance,
    instance_to_json,
    plan_csv,
    read_instance,
    resolve_seed,
    solve_apv_document,
    solve_apvc_document,
    verify_document,
)
from .server import run_server

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    stream=sys.stderr,  # stdout carries JSON documents and the MCP protocol
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per tool.

    Returns:
        Configured parser
    """
    parser = argparse.ArgumentParser(
        prog="assortment-visibility",
        description="Assortment planning under MNL choice with product visibility requirements",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Exact plan with the nested expanded sets
  assortment-visibility solve-apv --instance instance.json

  # Approximate plan under a cardinality cap
  assortment-visibility solve-apvc --instance capped.json --epsilon 0.5 --seed 7

  # Fees, and the fee of product 2 after one more required exposure
  assortment-visibility fees --instance instance.json --what-if 2

  # Serve the tools over MCP stdio
  assortment-visibility serve --config configs/example.toml
        """,
    )
    parser.add_argument("--config", "-c", type=Path, help="Path to TOML configuration file")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    parser.add_argument(
        "--csv", action="store_true", help="Print per-customer assortment rows instead of JSON"
    )

    commands = parser.add_subparsers(dest="command", required=True)

    apv = commands.add_parser("solve-apv", help="Exact visibility-constrained plan")
    apv.add_argument("--instance", "-i", type=Path, required=True, help="Instance JSON file")
    apv.add_argument("--method", choices=["nested", "lp"], default="nested")

    apvc = commands.add_parser("solve-apvc", help="Plan under a cardinality cap")
    apvc.add_argument("--instance", "-i", type=Path, required=True, help="Instance JSON file")
    apvc.add_argument("--epsilon", type=float, help="Accuracy parameter in (0, 1)")
    apvc.add_argument("--seed", type=int, help="Rounding seed (default: $ASSORT_SEED or config)")
    apvc.add_argument("--reps", type=int, help="Roundings per feasible guess")
    apvc.add_argument("--guess-budget", type=int, help="Maximum number of guesses")
    apvc.add_argument("--workers", type=int, help="Threads for the guess loop")
    apvc.add_argument("--oracle", action="store_true", help="Solve exactly by enumeration")

    fees = commands.add_parser("fees", help="Price of visibility and vendor fees")
    fees.add_argument("--instance", "-i", type=Path, required=True, help="Instance JSON file")
    fees.add_argument("--what-if", type=int, help="Product whose requirement is raised by one")

    generate = commands.add_parser("generate", help="Write a generated instance")
    generate.add_argument("--kind", choices=["random", "gadget"], default="random")
    generate.add_argument("--n", type=int, default=4, help="Number of products")
    generate.add_argument("--T", dest="horizon", type=int, default=2, help="Number of customers")
    generate.add_argument(
        "--seed", type=int, help="Generator seed (default: $ASSORT_SEED or config)"
    )
    generate.add_argument("--price-mode", choices=["general", "equal"], default="general")
    generate.add_argument("--k", type=int, help="Cardinality cap")
    generate.add_argument(
        "--integers", help="Comma-separated 3-PARTITION integers for --kind gadget"
    )
    generate.add_argument("--output", "-o", type=Path, help="Write to file instead of stdout")

    verify = commands.add_parser("verify", help="Cross-check solvers and oracles")
    verify.add_argument("--instance", "-i", type=Path, required=True, help="Instance JSON file")

    commands.add_parser("serve", help="Run the MCP server on stdio")
    return parser


def create_config_from_args(args: argparse.Namespace) -> Config:
    """Create configuration from command line arguments.

    Args:
        args: Parsed command line arguments

    Returns:
        Config object with flag overrides applied
    """
    if args.config:
        logger.info(f"Loading configuration from {args.config}")
        config = load_config(args.config)
    else:
        config = create_default_config()

    overrides = {
        key: getattr(args, key)
        for key in ("epsilon", "reps", "guess_budget", "workers")
        if getattr(args, key, None) is not None
    }
    if overrides:
        ptas = config.ptas.model_validate({**config.ptas.model_dump(), **overrides})
        config = config.model_copy(update={"ptas": ptas})
    return config


def _emit(document: Any) -> None:
    print(json.dumps(document, sort_keys=True, indent=2))


def _summary(message: str) -> None:
    print(message, file=sys.stderr)


def _emit_error(error: BaseException, exit_code: int) -> int:
    _emit(
        {"error": {"type": type(error).__name__, "message": str(error), "exit_code": exit_code}}
    )
    return exit_code


def _execute(args: argparse.Namespace, config: Config) -> int:
    if args.command == "serve":
        asyncio.run(run_server(config))
        return EXIT_OK

    if args.command == "generate":
        integers = None
        if args.integers:
            integers = [int(x) for x in args.integers.split(",")]
        instance = generate_instance(
            args.kind,
            n=args.n,
            horizon=args.horizon,
            seed=resolve_seed(args.seed, config),
            price_mode=args.price_mode,
            k=args.k,
            integers=integers,
        )
        text = instance_to_json(instance)
        if args.output:
            args.output.write_text(text + "\n")
            _summary(f"Wrote {instance.n}-product instance to {args.output}")
        else:
            print(text)
        return EXIT_OK

    instance = read_instance(args.instance)

    if args.command in ("solve-apv", "solve-apvc"):
        if args.command == "solve-apv":
            document, plan = solve_apv_document(instance, args.method)
        else:
            seed = resolve_seed(args.seed, config)
            document, plan = solve_apvc_document(instance, config, seed, args.oracle)
        if args.csv:
            print(plan_csv(instance, plan), end="")
        else:
            _emit(document)
        _summary(f"{document['method']}: objective {plan.objective:.6g}")
        for t, members in enumerate(plan.members()):
            _summary(f"  customer {t}: {members}")
        return EXIT_OK

    if args.command == "fees":
        document = fees_document(instance, args.what_if)
        _emit(document)
        _summary(f"Price of visibility: {document['delta']:.6g}")
        _summary(f"{'product':>8} {'contribution':>14} {'fee':>12}")
        for i, (c, fee) in enumerate(zip(document["contributions"], document["fees"])):
            _summary(f"{i:>8} {c:>14.6g} {fee:>12.6g}")
        return EXIT_OK

    document = verify_document(instance, config.oracle.max_cells)
    _emit(document)
    for check in document["checks"]:
        _summary(f"  [{'ok' if check['passed'] else 'FAIL'}] {check['name']}: {check['detail']}")
    if document["passed"]:
        _summary("all checks passed")
        return EXIT_OK
    _summary("some checks failed")
    return EXIT_FAILURE


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the subcommand and return the process exit code.

    Errors are printed on stdout as ``{"error": {...}}``; solver errors exit
    with their own code (2 infeasible, 3 guard or budget), unreadable or
    invalid input exits with 4.
    """
    args = build_parser().parse_args(argv)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Verbose logging enabled")

    try:
        config = create_config_from_args(args)
        if not args.verbose:
            logging.getLogger().setLevel(config.log_level.upper())
        return _execute(args, config)
    except KeyboardInterrupt:
        logger.info("Shutting down...")
        return EXIT_OK
    except AssortmentError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return _emit_error(e, e.exit_code)
    except (OSError, ValidationError) as e:
        logger.error(f"Cannot read input: {e}")
        return _emit_error(e, EXIT_IO)
    except ValueError as e:
        # invalid configuration files and malformed --integers lists
        logger.error(f"Invalid input: {e}")
        return _emit_error(e, EXIT_IO)
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return _emit_error(e, EXIT_FAILURE)


def main() -> None:
    """Main entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
