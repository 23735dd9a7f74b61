"""
Command Line Application Module
-------------------------------
Parser factory, logging setup and the dispatch from subcommand to route.
"""

import argparse
import json
import logging
from typing import List, Optional

from config.settings import get_settings

logger = logging.getLogger(__name__)


def create_application() -> argparse.ArgumentParser:
    """
    Parser factory with every subcommand registered.

    Returns:
        Configured ArgumentParser.
    """
    settings = get_settings()

    parser = argparse.ArgumentParser(
        prog="qghs",
        description=f"{settings.app_name} {settings.version}: inviscid QG half-space solver",
    )
    parser.add_argument(
        "--log-level",
        default=settings.runtime.log_level,
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="logging verbosity (default from QGHS_LOG_LEVEL)",
    )

    # Register subcommands
    _register_commands(parser)

    return parser


def _register_commands(parser: argparse.ArgumentParser) -> None:
    """Register all subcommands."""
    from cli.routes import register_commands

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    register_commands(subparsers)


def _setup_logging(level: str) -> None:
    """Configure application logging."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def run_command(argv: Optional[List[str]] = None) -> int:
    """
    Parse `argv`, run the selected subcommand and print its result as JSON.

    Returns:
        Exit status: 0 success, 1 numerical failure, 2 configuration or I/O failure.
    """
    parser = create_application()
    args = parser.parse_args(argv)
    _setup_logging(args.log_level)

    logger.info(f"Command '{args.command}' started")
    result = args.route(args)
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return int(result.get("exit_code", 0))
