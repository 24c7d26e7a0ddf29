"""
Property table models for structured extraction
"""

from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class PropertyRecord(BaseModel):
    """One key/value(/unit) row"""
    key: str = Field(min_length=1)
    raw_value: str = ""
    numeric_value: Optional[float] = None
    uncertainty: Optional[float] = Field(default=None, ge=0.0)
    unit: Optional[str] = None
    source_section: Optional[str] = None

    @model_validator(mode="after")
    def uncertainty_needs_value(self) -> "PropertyRecord":
        if self.uncertainty is not None and self.numeric_value is None:
            raise ValueError("uncertainty requires numeric_value")
        return self


class PropertyTable(BaseModel):
    """A parsed table with the repairs it needed"""
    title: str = ""
    records: List[PropertyRecord] = Field(default_factory=list)
    repair_notes: List[str] = Field(default_factory=list)


class TableSet(BaseModel):
    """Serialized form: {"tables": [...]}"""
    tables: List[PropertyTable] = Field(default_factory=list)


class ValueUnit(BaseModel):
    """Decomposition of a single table cell"""
    numeric_value: Optional[float] = None
    uncertainty: Optional[float] = None
    unit: Optional[str] = None
    residual_text: Optional[str] = None
    # verbatim source pieces, kept for lossless reconstruction
    number_text: Optional[str] = None
    plus_minus: Optional[str] = None
    uncertainty_text: Optional[str] = None

    def render(self) -> str:
        """Rebuild the cell from its parts (whitespace normalized)"""
        if self.number_text is None:
            return self.residual_text or ""
        parts = [self.number_text]
        if self.uncertainty_text is not None:
            parts += [self.plus_minus or "±", self.uncertainty_text]
        if self.unit == "%" and self.residual_text:
            parts.append(f"{self.residual_text}%")
            return " ".join(parts)
        if self.unit:
            parts.append(self.unit)
        if self.residual_text:
            parts.append(self.residual_text)
        return " ".join(parts)


class TableExtraction(BaseModel):
    """Outcome of running structured extraction over a document"""
    document_id: str
    tables: List[PropertyTable] = Field(default_factory=list)
    diagnostics: List[str] = Field(default_factory=list)
