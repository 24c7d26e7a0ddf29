"""
`extract`: property tables from ingested documents
"""

import argparse
import asyncio

import structlog

from app.cli.dependencies import build_gateway, build_run_config, load_document
from app.services.extraction_service import ExtractionService, records_to_csv, records_to_json
from app.services.prompt_service import get_template
from app.services.run_service import RunRecorder

logger = structlog.get_logger(__name__)


async def _extract(args: argparse.Namespace) -> int:
    config = build_run_config(args)

    with RunRecorder("extract", config) as recorder:
        template = get_template(args.template, config.templates_dir)
        documents = [load_document(recorder, path) for path in args.doc]

        async with build_gateway(config) as gateway:
            service = ExtractionService(gateway, config.provider, chain_of_thought=args.cot)
            outcomes = await asyncio.gather(
                *(service.extract_document(d, template) for d in documents), return_exceptions=True
            )

        failures = []
        for document, result in zip(documents, outcomes):
            if isinstance(result, BaseException):
                logger.error("Extraction failed", document_id=document.id, error=str(result))
                recorder.add_diagnostics([f"{document.id}: failed: {result}"])
                failures.append(result)
                continue
            recorder.add_diagnostics(f"{result.document_id}: {note}" for note in result.diagnostics)
            recorder.add_diagnostics(
                f"{result.document_id}: {note}" for table in result.tables for note in table.repair_notes
            )
            print(recorder.write_artifact(f"{result.document_id}.tables.json", records_to_json(result.tables)))
            print(recorder.write_artifact(f"{result.document_id}.tables.csv", records_to_csv(result.tables)))
            logger.info(
                "Tables extracted",
                document_id=result.document_id,
                tables=len(result.tables),
                records=sum(len(t.records) for t in result.tables),
            )
        if failures:
            raise failures[0]
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    return asyncio.run(_extract(args))


def register(subparsers) -> None:
    parser = subparsers.add_parser("extract", help="Extract property tables from document JSON")
    parser.add_argument("--doc", nargs="+", required=True, help="<id>.doc.json files")
    parser.add_argument("--template", default="structural_extraction", help="Template name or .prompt path")
    parser.add_argument("--cot", action="store_true", help="Append the step-by-step instruction suffix")
    parser.set_defaults(func=cmd_extract)
