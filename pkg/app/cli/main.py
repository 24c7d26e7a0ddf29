"""
Command-line entry point: argument parsing and exit-code mapping
"""

import argparse
import sys
from typing import List, Optional

import structlog
from dotenv import load_dotenv

from app.cli.commands import evaluate, extract, fixtures, ingest, kg
from app.core.config import settings
from app.core.errors import MatKGError
from app.core.logging import setup_logging

logger = structlog.get_logger(__name__)

COMMANDS = (ingest, extract, kg, evaluate, fixtures)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matkg",
        description=f"{settings.APP_NAME}: structured tables and knowledge graphs from paper text, with ROUGE evaluation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("--config", help="RunConfig JSON file")
    parser.add_argument("--mode", choices=["live", "cache", "replay"], help="LLM gateway mode")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--fixtures", help="Fixture directory")
    parser.add_argument("--log-level", default=None, help="Log level (default from LOG_LEVEL)")
    parser.add_argument("--log-format", choices=["json", "console"], default=None)

    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or settings.LOG_LEVEL, args.log_format or settings.LOG_FORMAT)

    try:
        return args.func(args)
    except MatKGError as e:
        logger.error("Command failed", command=args.command, error=str(e), exit_code=e.exit_code)
        print(f"matkg {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Unexpected failure", command=args.command)
        print(f"matkg {args.command}: unexpected error: {e}", file=sys.stderr)
        return 1
