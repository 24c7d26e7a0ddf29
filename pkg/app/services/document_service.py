"""
Document ingestion: section splitting, paragraph segmentation, figure
mentions and text normalization
"""

import hashlib
import re
from typing import Iterable, List, Optional, Pattern, Union

import structlog
from pydantic import ValidationError

from app.core.errors import EmptyInput, SchemaViolation
from app.models.document import PREAMBLE_HEADING, Document, FigureRef, NormalizationPolicy, Section

logger = structlog.get_logger(__name__)

DEFAULT_NUMBERED_HEADING = re.compile(r"^(?P<number>\d+(?:\.\d+)*)\.?\s+(?P<title>[A-Z][^\n]{0,100})$")
MARKDOWN_HEADING = re.compile(r"^(?P<hashes>#{1,6})\s+(?P<title>.+?)\s*#*\s*$")
FIGURE_MENTION = re.compile(r"\b(?P<prefix>Fig\.|Figure)\s*(?P<number>\d+)")
FIGURE_CAPTION = re.compile(r"^(?P<prefix>Fig\.|Figure)\s*(?P<number>\d+)\s*[.:]\s*(?P<caption>.+)$", re.DOTALL)
MARKDOWN_IMAGE = re.compile(r"!\[(?P<caption>[^\]]*)\]\((?P<path>[^)\s]+)\)")

ALL_CAPS_MAX_WORDS = 8


def segment_paragraphs(body: str) -> List[str]:
    """Split on blank lines; trim; drop empties"""
    return [chunk.strip() for chunk in re.split(r"\n\s*\n", body) if chunk.strip()]


def normalize_text(text: str, policy: NormalizationPolicy = NormalizationPolicy()) -> str:
    """Strip configured punctuation, optionally lowercase, collapse whitespace"""
    if policy.strip_punctuation:
        text = text.translate({ord(ch): None for ch in policy.strip_punctuation})
    if policy.lowercase:
        text = text.lower()
    if policy.collapse_whitespace:
        text = " ".join(text.split())
    return text.strip()


def _is_all_caps_heading(line: str) -> bool:
    letters = [ch for ch in line if ch.isalpha()]
    if len(letters) < 2 or len(line.split()) > ALL_CAPS_MAX_WORDS:
        return False
    return all(ch.isupper() for ch in letters) and not line.rstrip().endswith((".", ","))


def _plain_heading(line: str, numbered: Pattern[str]) -> Optional[tuple]:
    """Return (title, level) if the line opens a section in plain text"""
    stripped = line.strip()
    if not stripped:
        return None
    match = numbered.match(stripped)
    if match and not stripped.endswith("."):
        groups = match.groupdict()
        number = groups.get("number") or ""
        level = number.count(".") + 1 if number else 1
        return stripped, level
    if _is_all_caps_heading(stripped):
        return stripped, 1
    return None


def figure_number(label: str) -> Optional[str]:
    match = FIGURE_MENTION.search(label)
    return match.group("number") if match else None


def _collect_figures(paragraphs: Iterable[str]) -> List[FigureRef]:
    figures: List[FigureRef] = []
    seen = set()
    for paragraph in paragraphs:
        for image in MARKDOWN_IMAGE.finditer(paragraph):
            caption = image.group("caption").strip()
            number = figure_number(caption)
            label = f"Fig. {number}" if number else caption or image.group("path")
            if label not in seen:
                seen.add(label)
                figures.append(FigureRef(label=label, caption=caption, asset_path=image.group("path")))
        caption_match = FIGURE_CAPTION.match(paragraph)
        if caption_match:
            label = f"{caption_match.group('prefix')} {caption_match.group('number')}"
            if label not in seen:
                seen.add(label)
                figures.append(FigureRef(label=label, caption=caption_match.group("caption").strip()))
    return figures


def scan_figure_mentions(document: Document) -> Document:
    """Record `Fig. N` / `Figure N` mentions per section; flag undefined ones"""
    defined = {figure_number(f.label) for f in document.figures}
    diagnostics = [d for d in document.diagnostics if not d.startswith("undefined figure")]
    sections = []
    for section in document.sections:
        labels: List[str] = []
        for paragraph in section.paragraphs:
            for match in FIGURE_MENTION.finditer(paragraph):
                label = f"{match.group('prefix')} {match.group('number')}"
                if label not in labels:
                    labels.append(label)
        for label in labels:
            if figure_number(label) not in defined:
                note = f"undefined figure {label!r} mentioned in section {section.heading!r}"
                diagnostics.append(note)
                logger.warning("Figure mention without caption", label=label, section=section.heading)
        sections.append(section.model_copy(update={"figure_labels": labels}))
    return document.model_copy(update={"sections": sections, "diagnostics": diagnostics})


def _split_markdown(raw_text: str) -> List[tuple]:
    """(heading, level, body) triples in source order"""
    blocks = []
    heading, level, body = PREAMBLE_HEADING, 1, []
    in_fence = False
    for line in raw_text.splitlines():
        if line.strip().startswith("```"):
            in_fence = not in_fence
        match = None if in_fence else MARKDOWN_HEADING.match(line)
        if match:
            blocks.append((heading, level, "\n".join(body)))
            heading, level, body = match.group("title").strip(), len(match.group("hashes")), []
        else:
            body.append(line)
    blocks.append((heading, level, "\n".join(body)))
    return blocks


def _split_plain(raw_text: str, numbered: Pattern[str]) -> List[tuple]:
    blocks = []
    heading, level, body = PREAMBLE_HEADING, 1, []
    previous_blank = True
    for line in raw_text.splitlines():
        found = _plain_heading(line, numbered) if previous_blank else None
        if found:
            blocks.append((heading, level, "\n".join(body)))
            (heading, level), body = found, []
        else:
            body.append(line)
        previous_blank = not line.strip() or found is not None
    blocks.append((heading, level, "\n".join(body)))
    return blocks


def parse_document(
    raw_text: str,
    format: str = "plain",
    doc_id: Optional[str] = None,
    title: Optional[str] = None,
    heading_pattern: Union[str, Pattern[str], None] = None,
) -> Document:
    """Parse pre-extracted paper text into a section-structured document"""
    if not raw_text or not raw_text.strip():
        raise EmptyInput("document text")

    if format == "markdown":
        blocks = _split_markdown(raw_text)
    elif format == "plain":
        numbered = re.compile(heading_pattern) if isinstance(heading_pattern, str) else heading_pattern
        blocks = _split_plain(raw_text, numbered or DEFAULT_NUMBERED_HEADING)
    else:
        raise ValueError(f"unknown document format {format!r}")

    sections = []
    for index, (heading, level, body) in enumerate(blocks):
        paragraphs = segment_paragraphs(body)
        # empty preamble is dropped
        if index == 0 and heading == PREAMBLE_HEADING and not paragraphs:
            continue
        sections.append(Section(heading=heading, level=level, paragraphs=paragraphs))

    if title is None:
        title = next((s.heading for s in sections if s.heading != PREAMBLE_HEADING), "")

    document = Document(
        id=doc_id or "doc-" + hashlib.sha256(raw_text.encode("utf-8")).hexdigest()[:12],
        title=title,
        sections=sections,
        figures=_collect_figures(p for s in sections for p in s.paragraphs),
    )
    document = scan_figure_mentions(document)
    logger.info(
        "Parsed document",
        document_id=document.id,
        format=format,
        sections=len(document.sections),
        figures=len(document.figures),
    )
    return document


def render_markdown(document: Document) -> str:
    """Serialize the section tree back to markdown"""
    chunks = []
    for section in document.sections:
        if section.heading != PREAMBLE_HEADING:
            chunks.append(f"{'#' * min(section.level, 6)} {section.heading}")
        chunks.extend(section.paragraphs)
    return "\n\n".join(chunks) + "\n"


def document_text(document: Document, with_headings: bool = True) -> str:
    """Whole-document text for prompts that take the full paper"""
    chunks = []
    for section in document.sections:
        if not section.paragraphs:
            continue
        if with_headings and section.heading != PREAMBLE_HEADING:
            chunks.append(section.heading)
        chunks.extend(section.paragraphs)
    return "\n\n".join(chunks)


def document_to_json(document: Document) -> str:
    return document.model_dump_json(indent=2) + "\n"


def document_from_json(text: str) -> Document:
    try:
        return Document.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        raise SchemaViolation(".".join(str(part) for part in first["loc"]) or "$", first["msg"]) from e
