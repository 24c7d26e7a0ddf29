"""
`fixtures record|list`: manage the record/replay store by hand
"""

import argparse
from typing import Dict, List

import structlog

from app.cli.dependencies import build_run_config
from app.core.errors import ConfigError
from app.models.llm import ChatRequest, ChatResponse
from app.services.fixture_store import FixtureStore
from app.services.prompt_service import get_template, render
from app.services.run_service import read_input

logger = structlog.get_logger(__name__)


def _parse_vars(pairs: List[str]) -> Dict[str, str]:
    bindings = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise ConfigError(f"--var expects name=value, got {pair!r}")
        bindings[name] = value
    return bindings


def cmd_fixtures_record(args: argparse.Namespace) -> int:
    """Store a saved model answer under the digest of its prompt"""
    config = build_run_config(args)
    if config.fixtures_dir is None:
        raise ConfigError("no fixtures directory configured")

    if args.prompt_file:
        prompt = read_input(args.prompt_file)
        template_name = args.template
    elif args.template and args.input_file:
        template = get_template(args.template, config.templates_dir)
        prompt = render(template, read_input(args.input_file), _parse_vars(args.var)).text
        template_name = template.name
    else:
        raise ConfigError("give --prompt-file, or --template with --input-file")

    system = read_input(args.system_file) if args.system_file else None
    request = ChatRequest.from_prompt(prompt, config.provider, system=system, template_name=template_name)
    response = ChatResponse(content=read_input(args.response_file))
    digest = FixtureStore(config.fixtures_dir).record_fixture(request, response)
    print(digest)
    return 0


def cmd_fixtures_list(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    if config.fixtures_dir is None:
        raise ConfigError("no fixtures directory configured")
    for entry in FixtureStore(config.fixtures_dir).list_entries():
        print(f"{entry.digest}  {entry.template_name or '-':<24}  {entry.recorded_at.isoformat()}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("fixtures", help="Record or list replay fixtures")
    actions = parser.add_subparsers(dest="fixtures_command", required=True)

    record = actions.add_parser("record", help="Record a saved model answer")
    record.add_argument("--response-file", required=True, help="Model answer text")
    record.add_argument("--prompt-file", help="Exact rendered prompt text")
    record.add_argument("--template", help="Template name or path (renders --input-file)")
    record.add_argument("--input-file", help="Input text for --template")
    record.add_argument("--var", action="append", default=[], help="Template binding name=value")
    record.add_argument("--system-file", help="System message text")
    record.set_defaults(func=cmd_fixtures_record)

    listing = actions.add_parser("list", help="List recorded fixtures")
    listing.set_defaults(func=cmd_fixtures_list)
