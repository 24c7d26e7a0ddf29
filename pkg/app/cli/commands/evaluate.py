"""
`eval` and `eval-corpus`: ROUGE exact/relaxed scoring
"""

import argparse
from pathlib import Path

from app.cli.dependencies import build_run_config
from app.models.document import NormalizationPolicy
from app.models.run import RunConfig
from app.services.rouge_service import (
    corpus_report_to_csv,
    corpus_report_to_json,
    corpus_report_to_text,
    evaluate_corpus,
    load_manifest,
    load_policy,
    match_report,
    match_report_to_text,
)
from app.services.run_service import RunRecorder, read_input


def _policy(args: argparse.Namespace, config: RunConfig) -> NormalizationPolicy:
    return load_policy(args.policy) if args.policy else config.normalization


def cmd_eval(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    report = match_report(read_input(args.ref), read_input(args.cand), _policy(args, config))
    print(match_report_to_text(report))
    print(report.model_dump_json(indent=2))
    return 0


def cmd_eval_corpus(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    with RunRecorder("eval-corpus", config) as recorder:
        manifest_path = Path(args.manifest)
        recorder.read_input(manifest_path)
        manifest = load_manifest(manifest_path)

        report = evaluate_corpus(manifest.pairs, _policy(args, config), base_dir=manifest_path.parent)
        text = corpus_report_to_text(report)
        recorder.write_artifact("report.txt", text)
        recorder.write_artifact("report.json", corpus_report_to_json(report))
        recorder.write_artifact("report.csv", corpus_report_to_csv(report))
    print(text)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Score one candidate against one reference")
    parser.add_argument("--ref", required=True, help="Reference text file")
    parser.add_argument("--cand", required=True, help="Candidate text file")
    parser.add_argument("--policy", help="Normalization policy JSON file")
    parser.set_defaults(func=cmd_eval)

    parser = subparsers.add_parser("eval-corpus", help="Score every pair of a corpus manifest")
    parser.add_argument("--manifest", required=True, help='JSON file: {"pairs": [{name, reference_path, candidate_path}]}')
    parser.add_argument("--policy", help="Normalization policy JSON file")
    parser.set_defaults(func=cmd_eval_corpus)
