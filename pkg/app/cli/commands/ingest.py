"""
`ingest`: paper text files into section-structured document JSON
"""

import argparse
from pathlib import Path

import structlog

from app.cli.dependencies import build_run_config
from app.core.config import settings
from app.services.document_service import document_to_json, parse_document
from app.services.run_service import RunRecorder

logger = structlog.get_logger(__name__)

MARKDOWN_SUFFIXES = {".md", ".markdown"}


def detect_format(path: Path) -> str:
    return "markdown" if path.suffix.lower() in MARKDOWN_SUFFIXES else "plain"


def cmd_ingest(args: argparse.Namespace) -> int:
    config = build_run_config(args)

    with RunRecorder("ingest", config) as recorder:
        for name in args.inputs:
            path = Path(name)
            raw_text = recorder.read_input(path)
            fmt = detect_format(path) if args.format == "auto" else args.format
            document = parse_document(
                raw_text,
                format=fmt,
                doc_id=args.doc_id if args.doc_id and len(args.inputs) == 1 else path.stem,
                heading_pattern=args.heading_pattern or settings.PLAIN_HEADING_PATTERN,
            )
            for note in document.diagnostics:
                logger.warning("Document diagnostic", document_id=document.id, note=note)
            recorder.add_diagnostics(f"{document.id}: {note}" for note in document.diagnostics)
            output = recorder.write_artifact(f"{document.id}.doc.json", document_to_json(document))
            print(output)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("ingest", help="Parse paper text into document JSON")
    parser.add_argument("inputs", nargs="+", help="UTF-8 .txt or .md files")
    parser.add_argument("--format", choices=["auto", "plain", "markdown"], default="auto")
    parser.add_argument("--doc-id", help="Document id (single input only; default is the file stem)")
    parser.add_argument("--heading-pattern", help="Regex for plain-text section headings")
    parser.set_defaults(func=cmd_ingest)
