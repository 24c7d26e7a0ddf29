"""
Document models for paper ingestion
"""

from typing import FrozenSet, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

PREAMBLE_HEADING = "_preamble"


class FigureRef(BaseModel):
    """Figure caption metadata (images themselves are not decoded)"""
    label: str
    caption: str = ""
    asset_path: Optional[str] = None


class Section(BaseModel):
    """One heading-delimited segment of a paper"""
    heading: str = Field(min_length=1)
    level: int = Field(default=1, ge=1)
    paragraphs: List[str] = Field(default_factory=list)
    figure_labels: List[str] = Field(default_factory=list)

    @field_validator("paragraphs")
    @classmethod
    def paragraphs_not_blank(cls, v: List[str]) -> List[str]:
        if any(not p.strip() for p in v):
            raise ValueError("paragraphs must be non-empty strings")
        return v


class Document(BaseModel):
    """A paper as an ordered tree of sections"""
    id: str
    title: str = ""
    sections: List[Section] = Field(default_factory=list)
    figures: List[FigureRef] = Field(default_factory=list)
    diagnostics: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def figure_labels_unique(self) -> "Document":
        labels = [f.label for f in self.figures]
        if len(labels) != len(set(labels)):
            raise ValueError("figure labels must be unique within a document")
        return self

    @property
    def is_empty(self) -> bool:
        return not any(s.paragraphs for s in self.sections)


class NormalizationPolicy(BaseModel):
    """Text normalization applied before scoring"""
    model_config = ConfigDict(frozen=True)

    strip_punctuation: FrozenSet[str] = frozenset({".", ",", ";"})
    lowercase: bool = True
    collapse_whitespace: bool = True
