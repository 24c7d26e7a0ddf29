"""
ROUGE scoring: exact match (ROUGE-1/2) and relaxed match (ROUGE-L/Lsum)
"""

import json
import re
from collections import Counter
from io import StringIO
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd
import structlog
from pydantic import ValidationError

from app.core.errors import ConfigError, FileUnreadable
from app.models.document import NormalizationPolicy
from app.models.evaluation import CorpusManifest, CorpusPair, CorpusReport, CorpusRow, MatchReport, RougeScore
from app.services.document_service import normalize_text

logger = structlog.get_logger(__name__)

DEFAULT_POLICY = NormalizationPolicy()
SENTENCE_BOUNDARY = re.compile(r"\n+|(?<=[.!?])\s+")
REPORT_CSV_COLUMNS = [
    "pair_name",
    "exact_recall",
    "exact_precision",
    "exact_f1",
    "relaxed_recall",
    "relaxed_precision",
    "relaxed_f1",
]


def tokenize(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> List[str]:
    return normalize_text(text, policy).split()


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_rouge(reference: Sequence[str], candidate: Sequence[str], n: int) -> RougeScore:
    """ROUGE-N over token lists with clipped n-gram counts"""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    reference_ngrams = ngrams(reference, n)
    candidate_ngrams = ngrams(candidate, n)
    overlap = sum((reference_ngrams & candidate_ngrams).values())
    return RougeScore.from_counts(overlap, sum(candidate_ngrams.values()), sum(reference_ngrams.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, O(len(a)*len(b)) time, O(min) space"""
    if len(a) < len(b):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            current.append(previous[j - 1] + 1 if x == y else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def lcs_positions(reference: Sequence[str], candidate: Sequence[str]) -> List[int]:
    """Indices of `reference` on one longest common subsequence"""
    m, n = len(reference), len(candidate)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if reference[i - 1] == candidate[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])

    positions = []
    i, j = m, n
    while i and j:
        if reference[i - 1] == candidate[j - 1]:
            positions.append(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return positions[::-1]


def rouge_l(reference: str, candidate: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> RougeScore:
    """LCS over the whole text, newlines ignored"""
    ref_tokens = tokenize(reference.replace("\n", " "), policy)
    cand_tokens = tokenize(candidate.replace("\n", " "), policy)
    return RougeScore.from_counts(lcs_length(ref_tokens, cand_tokens), len(cand_tokens), len(ref_tokens))


def split_sentences(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> List[List[str]]:
    """Sentence token lists; boundaries are found before punctuation is stripped"""
    sentences = [tokenize(chunk, policy) for chunk in SENTENCE_BOUNDARY.split(text)]
    return [s for s in sentences if s]


def union_lcs_hits(reference_sentences: List[List[str]], candidate_sentences: List[List[str]]) -> int:
    """Summary-level LCS hit count

    For every reference sentence the LCS positions against each candidate
    sentence are unioned; a hit is counted only while the token is still
    available in both texts, so no token is counted twice.
    """
    reference_counts = Counter(t for s in reference_sentences for t in s)
    candidate_counts = Counter(t for s in candidate_sentences for t in s)
    hits = 0
    for reference in reference_sentences:
        marked = set()
        for candidate in candidate_sentences:
            marked.update(lcs_positions(reference, candidate))
        for position in sorted(marked):
            token = reference[position]
            if reference_counts[token] > 0 and candidate_counts[token] > 0:
                reference_counts[token] -= 1
                candidate_counts[token] -= 1
                hits += 1
    return hits


def rouge_lsum(reference: str, candidate: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> RougeScore:
    reference_sentences = split_sentences(reference, policy)
    candidate_sentences = split_sentences(candidate, policy)
    hits = union_lcs_hits(reference_sentences, candidate_sentences)
    return RougeScore.from_counts(
        hits,
        sum(len(s) for s in candidate_sentences),
        sum(len(s) for s in reference_sentences),
    )


def match_report(reference: str, candidate: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> MatchReport:
    """All four variants; exact and relaxed are componentwise means"""
    ref_tokens = tokenize(reference, policy)
    cand_tokens = tokenize(candidate, policy)
    rouge1 = ngram_rouge(ref_tokens, cand_tokens, 1)
    rouge2 = ngram_rouge(ref_tokens, cand_tokens, 2)
    rougeL = rouge_l(reference, candidate, policy)
    rougeLsum = rouge_lsum(reference, candidate, policy)
    return MatchReport(
        rouge1=rouge1,
        rouge2=rouge2,
        rougeL=rougeL,
        rougeLsum=rougeLsum,
        exact=RougeScore.mean([rouge1, rouge2]),
        relaxed=RougeScore.mean([rougeL, rougeLsum]),
    )


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        logger.error("Cannot read evaluation file", path=str(path), error=str(e))
        raise FileUnreadable(str(path), str(e)) from e


def load_policy(path: Union[str, Path]) -> NormalizationPolicy:
    """Normalization policy from a JSON file"""
    text = _read(Path(path))
    try:
        return NormalizationPolicy.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"invalid normalization policy {path}: {e.errors()[0]['msg']}") from e


def load_manifest(path: Union[str, Path]) -> CorpusManifest:
    text = _read(Path(path))
    try:
        return CorpusManifest.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"invalid corpus manifest {path}: {e.errors()[0]['msg']}") from e


def evaluate_corpus(
    pairs: Sequence[CorpusPair],
    policy: NormalizationPolicy = DEFAULT_POLICY,
    base_dir: Optional[Union[str, Path]] = None,
) -> CorpusReport:
    """One exact/relaxed row per pair plus the average row"""
    base = Path(base_dir) if base_dir is not None else Path(".")
    rows = []
    for pair in pairs:
        reference = _read(base / pair.reference_path)
        candidate = _read(base / pair.candidate_path)
        report = match_report(reference, candidate, policy)
        rows.append(CorpusRow(pair_name=pair.name, exact=report.exact, relaxed=report.relaxed))
        logger.info("Scored pair", pair=pair.name, exact_f1=round(report.exact.f1, 5), relaxed_f1=round(report.relaxed.f1, 5))
    return CorpusReport.from_rows(rows)


def _score_cells(score: RougeScore) -> Tuple[str, str, str]:
    return f"{score.recall:.5f}", f"{score.precision:.5f}", f"{score.f1:.5f}"


def match_report_to_text(report: MatchReport) -> str:
    lines = [f"{'metric':<10} {'recall':>9} {'precision':>9} {'f1':>9}"]
    for name in ("rouge1", "rouge2", "rougeL", "rougeLsum", "exact", "relaxed"):
        recall, precision, f1 = _score_cells(getattr(report, name))
        lines.append(f"{name:<10} {recall:>9} {precision:>9} {f1:>9}")
    return "\n".join(lines) + "\n"


def corpus_report_to_text(report: CorpusReport) -> str:
    """Exact Match R/P/F1 and Relaxed Match R/P/F1 per pair"""
    width = max([len(r.pair_name) for r in report.rows] + [len("Average"), len("Dataset")])
    lines = [
        f"{'':<{width}}   {'Exact Match':^29}   {'Relaxed Match':^29}",
        f"{'Dataset':<{width}}   {'Recall':>9}{'Precision':>10}{'F1':>10}   {'Recall':>9}{'Precision':>10}{'F1':>10}",
    ]
    for row in report.rows + [report.average_row]:
        er, ep, ef = _score_cells(row.exact)
        rr, rp, rf = _score_cells(row.relaxed)
        lines.append(f"{row.pair_name:<{width}}   {er:>9}{ep:>10}{ef:>10}   {rr:>9}{rp:>10}{rf:>10}")
    return "\n".join(lines) + "\n"


def corpus_report_to_json(report: CorpusReport) -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def corpus_report_to_csv(report: CorpusReport) -> str:
    rows = [
        {
            "pair_name": row.pair_name,
            "exact_recall": row.exact.recall,
            "exact_precision": row.exact.precision,
            "exact_f1": row.exact.f1,
            "relaxed_recall": row.relaxed.recall,
            "relaxed_precision": row.relaxed.precision,
            "relaxed_f1": row.relaxed.f1,
        }
        for row in report.rows + [report.average_row]
    ]
    buffer = StringIO()
    pd.DataFrame(rows, columns=REPORT_CSV_COLUMNS).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()
