"""
`kg` and `export-dot`: knowledge graphs from ingested documents
"""

import argparse
import asyncio
from pathlib import Path

import structlog

from app.cli.dependencies import build_gateway, build_run_config, load_document
from app.services.graph_service import export_dot, parse_kg_json, rubric_report, rubric_to_text, serialize_kg_json
from app.services.kg_pipeline_service import KnowledgeGraphService
from app.services.run_service import RunRecorder

logger = structlog.get_logger(__name__)


async def _kg(args: argparse.Namespace) -> int:
    config = build_run_config(args)

    with RunRecorder(f"kg --strategy {args.strategy}", config) as recorder:
        documents = [load_document(recorder, path) for path in args.doc]

        async with build_gateway(config) as gateway:
            service = KnowledgeGraphService(gateway, config.provider, config.templates_dir, chain_of_thought=args.cot)
            extract = service.gen1_extract if args.strategy == "gen1" else service.gen2_extract
            outcomes = await asyncio.gather(*(extract(d) for d in documents), return_exceptions=True)

        failures = []
        for document, result in zip(documents, outcomes):
            if isinstance(result, BaseException):
                logger.error("Graph extraction failed", document_id=document.id, error=str(result))
                recorder.add_diagnostics([f"{document.id}: failed: {result}"])
                failures.append(result)
                continue
            stem = f"{document.id}.{args.strategy}"
            recorder.add_diagnostics(f"{document.id}: {note}" for note in result.diagnostics)
            if result.summary is not None:
                print(recorder.write_artifact(f"{stem}.summary.txt", result.summary.rstrip("\n") + "\n"))
            print(recorder.write_artifact(f"{stem}.kg.json", serialize_kg_json(result.graph)))
            print(recorder.write_artifact(f"{stem}.kg.dot", export_dot(result.graph)))

            report = rubric_report(result.graph, document)
            print(recorder.write_artifact(f"{stem}.rubric.json", report.model_dump_json(indent=2) + "\n"))
            print(recorder.write_artifact(f"{stem}.rubric.txt", rubric_to_text(report)))
        if failures:
            raise failures[0]
    return 0


def cmd_kg(args: argparse.Namespace) -> int:
    return asyncio.run(_kg(args))


def cmd_export_dot(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    with RunRecorder("export-dot", config) as recorder:
        path = Path(args.kg)
        graph = parse_kg_json(recorder.read_input(path))
        name = path.name[: -len(".json")] if path.name.endswith(".json") else path.name
        print(recorder.write_artifact(f"{name}.dot", export_dot(graph)))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("kg", help="Build knowledge graphs from document JSON")
    parser.add_argument("--doc", nargs="+", required=True, help="<id>.doc.json files")
    parser.add_argument("--strategy", choices=["gen1", "gen2"], default="gen2")
    parser.add_argument("--cot", action="store_true", help="Append the step-by-step instruction suffix")
    parser.set_defaults(func=cmd_kg)

    parser = subparsers.add_parser("export-dot", help="Render a KG JSON file as Graphviz DOT")
    parser.add_argument("--kg", required=True, help="KG JSON file")
    parser.set_defaults(func=cmd_export_dot)
