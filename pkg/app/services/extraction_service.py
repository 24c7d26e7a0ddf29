"""
Structured extraction: markdown tables from model output into validated
property records
"""

import asyncio
import re
from io import StringIO
from typing import List, Optional, Tuple

import pandas as pd
import structlog
from pydantic import ValidationError

from app.core.errors import NoTablesFound, SchemaViolation
from app.models.document import Document
from app.models.llm import ChatRequest, ProviderConfig
from app.models.prompt import PromptTemplate
from app.models.tables import PropertyRecord, PropertyTable, TableExtraction, TableSet, ValueUnit
from app.services.llm_service import LLMGateway
from app.services.prompt_service import render

logger = structlog.get_logger(__name__)

NUMBER = r"[-+−]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"
PLUS_MINUS = r"±|\+/-|\+-"
VALUE_CELL = re.compile(
    rf"^(?P<num>{NUMBER})(?!\d)(?:\s*(?P<pm>{PLUS_MINUS})\s*(?P<unc>\d+(?:\.\d+)?)(?!\d))?(?P<rest>(?:[\s%°µμ\w].*)?)$",
    re.DOTALL,
)
SEPARATOR_ROW = re.compile(r"^\|?\s*:?-+:?\s*(?:\|\s*:?-+:?\s*)*\|?$")
FUSED_BOUNDARY = re.compile(r"\|\s*\|")
HEADING_LINE = re.compile(r"^#{1,6}\s+(?P<title>.+?)\s*$")
BOLD_LINE = re.compile(r"^\*\*(?P<title>.+?)\*\*:?$")
TABLE_CAPTION = re.compile(r"^(?:table\s*\d*\s*[:.\-])\s*", re.IGNORECASE)
UNIT_HEADER = re.compile(r"^units?$", re.IGNORECASE)

CSV_COLUMNS = ["table_title", "key", "raw_value", "numeric_value", "uncertainty", "unit", "source_section"]


def _to_float(text: str) -> float:
    return float(text.replace("−", "-"))


def parse_value_unit(cell: str) -> ValueUnit:
    """Split a cell into number, uncertainty, unit and leftover text"""
    text = cell.strip()
    match = VALUE_CELL.match(text)
    if not match:
        return ValueUnit(residual_text=text or None)

    rest = match.group("rest").strip()
    unit: Optional[str] = None
    residual: Optional[str] = None
    if rest.endswith("%"):
        unit = "%"
        residual = rest[:-1].strip() or None
    elif rest:
        head, _, tail = rest.partition(" ")
        unit = head
        residual = tail.strip() or None

    unc = match.group("unc")
    return ValueUnit(
        numeric_value=_to_float(match.group("num")),
        uncertainty=_to_float(unc) if unc is not None else None,
        unit=unit,
        residual_text=residual,
        number_text=match.group("num"),
        plus_minus=match.group("pm"),
        uncertainty_text=unc,
    )


def _title_from(line: str) -> Optional[str]:
    stripped = line.strip()
    match = HEADING_LINE.match(stripped) or BOLD_LINE.match(stripped)
    if match:
        title = match.group("title")
    elif TABLE_CAPTION.match(stripped):
        title = stripped
    else:
        return None
    title = TABLE_CAPTION.sub("", title.strip("*").strip()).strip().rstrip(":")
    return title.strip("*").strip() or None


def _split_row(line: str, ncols: int) -> Tuple[List[List[str]], List[str]]:
    """Cells of one source row, split into several rows if fused"""
    repairs = []
    body = line.strip()[1:]
    if body.endswith("|"):
        body = body[:-1]
    else:
        repairs.append("added missing trailing pipe")

    cells = [c.strip() for c in body.split("|")]
    if len(cells) > ncols and FUSED_BOUNDARY.search(body):
        groups = [[c.strip() for c in segment.split("|")] for segment in FUSED_BOUNDARY.split(body)]
        groups = [g for g in groups if any(g)]
        repairs.append(f"split fused row into {len(groups)} rows")
    else:
        groups = [cells]
    return groups, repairs


def _records_from_cells(
    cells: List[str], header: Optional[List[str]], source_section: Optional[str]
) -> Tuple[List[PropertyRecord], List[str]]:
    notes = []
    key = cells[0] if cells else ""
    if not key:
        return [], ["dropped row with an empty first cell"]

    ncols = len(header) if header else 2
    if len(cells) < 2:
        return [], [f"dropped {key!r}: no value cell"]
    if len(cells) < ncols:
        notes.append(f"padded short row {key!r}")
        cells = cells + [""] * (ncols - len(cells))
    if len(cells) > ncols:
        notes.append(f"merged {len(cells) - ncols} extra cell(s) of {key!r} into the last column")
        cells = cells[: ncols - 1] + [" | ".join(cells[ncols - 1:])]

    unit_col = next((i for i, h in enumerate(header or []) if i > 0 and UNIT_HEADER.match(h)), None)
    value_cols = [i for i in range(1, ncols) if i != unit_col]
    records = []
    for col in value_cols:
        raw = cells[col]
        if not raw and len(value_cols) > 1:
            continue
        parsed = parse_value_unit(raw)
        unit = parsed.unit
        if unit_col is not None and cells[unit_col] and unit is None:
            unit = cells[unit_col]
        if len(value_cols) == 1:
            record_key = key
        else:
            column = header[col] if header and header[col] else f"column {col + 1}"
            record_key = f"{key} ({column})"
        records.append(
            PropertyRecord(
                key=record_key,
                raw_value=raw,
                numeric_value=parsed.numeric_value,
                uncertainty=parsed.uncertainty,
                unit=unit,
                source_section=source_section,
            )
        )
    if not records:
        notes.append(f"dropped {key!r}: all value cells empty")
    return records, notes


def _parse_block(lines: List[str], title: str, source_section: Optional[str]) -> PropertyTable:
    notes: List[str] = []
    if len(lines) >= 2 and SEPARATOR_ROW.match(lines[1].strip()):
        header = [c.strip() for c in lines[0].strip().strip("|").split("|")]
        data = lines[2:]
    else:
        header = None
        data = lines
        notes.append(f"{title or 'table'}: no header row, read rows as key/value pairs")
    ncols = len(header) if header else 2

    records: List[PropertyRecord] = []
    for index, line in enumerate(data, start=1):
        prefix = f"{title or 'table'} row {index}"
        if SEPARATOR_ROW.match(line.strip()):
            notes.append(f"{prefix}: dropped stray separator row")
            continue
        groups, repairs = _split_row(line, ncols)
        for cells in groups:
            row_records, row_notes = _records_from_cells(cells, header, source_section)
            records.extend(row_records)
            repairs.extend(row_notes)
        if repairs:
            notes.append(f"{prefix}: " + "; ".join(repairs))
    return PropertyTable(title=title, records=records, repair_notes=notes)


def parse_markdown_tables(text: str, source_section: Optional[str] = None) -> List[PropertyTable]:
    """Find pipe tables in model output, repairing the malformed rows

    Raises NoTablesFound when the output holds no table with records,
    which usually means the model answered in free text.
    """
    tables: List[PropertyTable] = []
    pending_title: Optional[str] = None
    block: List[str] = []

    def flush():
        nonlocal pending_title
        if not block:
            return
        table = _parse_block(list(block), pending_title or "", source_section)
        block.clear()
        pending_title = None
        if table.records:
            tables.append(table)
            for note in table.repair_notes:
                logger.info("Repaired table row", table=table.title, note=note)
        else:
            logger.warning("Skipping table without records", table=table.title)

    for line in text.splitlines():
        if line.strip().startswith("|"):
            block.append(line)
            continue
        flush()
        title = _title_from(line) if line.strip() else None
        if title:
            pending_title = title
    flush()

    if not tables:
        raise NoTablesFound()
    return tables


def records_to_json(tables: List[PropertyTable]) -> str:
    return TableSet(tables=tables).model_dump_json(indent=2) + "\n"


def records_from_json(text: str) -> List[PropertyTable]:
    try:
        return TableSet.model_validate_json(text).tables
    except ValidationError as e:
        first = e.errors()[0]
        path = ".".join(str(part) for part in first["loc"]) or "$"
        raise SchemaViolation(path, first["msg"]) from e


def records_to_csv(tables: List[PropertyTable]) -> str:
    """One CSV row per record, the JSON record fields plus the table title"""
    rows = [
        {"table_title": table.title, **record.model_dump()}
        for table in tables
        for record in table.records
    ]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    buffer = StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


class ExtractionService:
    """Runs the structured-extraction prompt over every section of a document"""

    def __init__(self, gateway: LLMGateway, provider: ProviderConfig, chain_of_thought: bool = False):
        self.gateway = gateway
        self.provider = provider
        self.chain_of_thought = chain_of_thought

    async def extract_document(self, document: Document, template: PromptTemplate) -> TableExtraction:
        sections = [s for s in document.sections if s.paragraphs]
        logger.info("Extracting tables", document_id=document.id, sections=len(sections), template=template.name)

        async def run(section):
            prompt = render(
                template,
                "\n\n".join(section.paragraphs),
                {"section_heading": section.heading, "document_title": document.title},
                chain_of_thought=self.chain_of_thought,
            )
            request = ChatRequest.from_prompt(prompt.text, self.provider, template_name=template.name)
            response = await self.gateway.complete(request)
            return section.heading, response.content

        results = await asyncio.gather(*(run(s) for s in sections))

        tables: List[PropertyTable] = []
        diagnostics: List[str] = []
        for heading, content in results:
            try:
                tables.extend(parse_markdown_tables(content, source_section=heading))
            except NoTablesFound:
                diagnostics.append(f"no tables in model output for section {heading!r}")
                logger.warning("No tables in model output", document_id=document.id, section=heading)

        if not tables:
            raise NoTablesFound(f"no tables extracted from document {document.id}")
        return TableExtraction(document_id=document.id, tables=tables, diagnostics=diagnostics)
