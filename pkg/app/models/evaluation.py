"""
ROUGE evaluation models
"""

from typing import List, Sequence

from pydantic import BaseModel, ConfigDict, Field


class RougeScore(BaseModel):
    """Precision / recall / F1 triple"""
    model_config = ConfigDict(frozen=True)

    precision: float = Field(default=0.0, ge=0.0, le=1.0)
    recall: float = Field(default=0.0, ge=0.0, le=1.0)
    f1: float = Field(default=0.0, ge=0.0, le=1.0)

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        total = precision + recall
        f1 = 2 * precision * recall / total if total > 0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1)

    @classmethod
    def from_counts(cls, overlap: float, candidate_total: float, reference_total: float) -> "RougeScore":
        precision = overlap / candidate_total if candidate_total > 0 else 0.0
        recall = overlap / reference_total if reference_total > 0 else 0.0
        return cls.from_pr(precision, recall)

    @classmethod
    def mean(cls, scores: Sequence["RougeScore"]) -> "RougeScore":
        """Componentwise arithmetic mean (F1 is averaged, not recomputed)"""
        if not scores:
            return cls()
        n = len(scores)
        return cls(
            precision=sum(s.precision for s in scores) / n,
            recall=sum(s.recall for s in scores) / n,
            f1=sum(s.f1 for s in scores) / n,
        )


class MatchReport(BaseModel):
    """All four ROUGE variants plus the exact/relaxed aggregates"""
    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore
    rougeLsum: RougeScore
    exact: RougeScore
    relaxed: RougeScore


class CorpusRow(BaseModel):
    pair_name: str
    exact: RougeScore
    relaxed: RougeScore


class CorpusReport(BaseModel):
    """Per-pair exact/relaxed rows plus their average"""
    rows: List[CorpusRow] = Field(default_factory=list)
    average_row: CorpusRow

    @classmethod
    def from_rows(cls, rows: List[CorpusRow]) -> "CorpusReport":
        average = CorpusRow(
            pair_name="Average",
            exact=RougeScore.mean([r.exact for r in rows]),
            relaxed=RougeScore.mean([r.relaxed for r in rows]),
        )
        return cls(rows=rows, average_row=average)


class CorpusPair(BaseModel):
    name: str
    reference_path: str
    candidate_path: str


class CorpusManifest(BaseModel):
    """`eval-corpus --manifest` file"""
    pairs: List[CorpusPair]
