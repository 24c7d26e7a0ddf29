"""
Knowledge graph extraction pipelines

Generation 1 asks for relation triplets section by section. Generation 2
first summarizes the whole document around its processes and results, then
converts the summary into the node/edge JSON schema.
"""

import asyncio
from pathlib import Path
from typing import List, Optional, Tuple, Union

import structlog

from app.core.errors import ContractError, EmptyInput, EmptyLabel, ParseFailure
from app.models.document import Document, Section
from app.models.graph import KGExtraction, KnowledgeGraph, Pipeline, Provenance
from app.models.llm import ChatRequest, ProviderConfig
from app.services.document_service import document_text
from app.services.graph_service import extract_json, merge_graphs, parse_kg_json, parse_triplets_payload
from app.services.llm_service import LLMGateway
from app.services.prompt_service import get_template, render

logger = structlog.get_logger(__name__)

SUMMARY_SECTION = "summary"
STRICT_FORMAT_REMINDER = (
    "Your previous answer could not be read. Reply with exactly one JSON object "
    'with the keys "nodes" and "edges" as described, with no code fences, '
    "no commentary and no trailing text."
)


class KnowledgeGraphService:
    """Runs the Generation 1 and Generation 2 pipelines through one gateway"""

    def __init__(
        self,
        gateway: LLMGateway,
        provider: ProviderConfig,
        templates_dir: Optional[Union[str, Path]] = None,
        chain_of_thought: bool = False,
    ):
        self.gateway = gateway
        self.provider = provider
        self.templates_dir = templates_dir
        self.chain_of_thought = chain_of_thought

    async def _section_graph(self, document: Document, section: Section, template) -> Tuple[str, KnowledgeGraph]:
        prompt = render(
            template,
            "\n\n".join(section.paragraphs),
            {"section_heading": section.heading, "document_title": document.title},
            chain_of_thought=self.chain_of_thought,
        )
        request = ChatRequest.from_prompt(prompt.text, self.provider, template_name=template.name)
        response = await self.gateway.complete(request)
        provenance = Provenance(section=section.heading, pipeline=Pipeline.GEN1)
        try:
            graph = parse_triplets_payload(extract_json(response.content), provenance, document.id)
        except (ContractError, EmptyLabel) as e:
            raise ParseFailure(section.heading, str(e)) from e
        return section.heading, graph

    async def gen1_extract(self, document: Document, template_name: str = "relation_extraction") -> KGExtraction:
        """Direct relation extraction, one prompt per non-empty section"""
        template = get_template(template_name, self.templates_dir)
        sections = [s for s in document.sections if s.paragraphs]
        logger.info("Generation 1 extraction", document_id=document.id, sections=len(sections))

        results = await asyncio.gather(
            *(self._section_graph(document, s, template) for s in sections),
            return_exceptions=True,
        )

        graph = KnowledgeGraph(source_document_id=document.id)
        diagnostics: List[str] = []
        for result in results:
            if isinstance(result, ParseFailure):
                diagnostics.append(str(result))
                logger.warning("Section skipped", document_id=document.id, section=result.section, error=result.detail)
                continue
            if isinstance(result, BaseException):
                raise result
            _, section_graph = result
            graph = merge_graphs(graph, section_graph, source_document_id=document.id, diagnostics=diagnostics)

        logger.info(
            "Generation 1 graph built",
            document_id=document.id,
            nodes=len(graph.nodes),
            edges=len(graph.edges),
            diagnostics=len(diagnostics),
        )
        return KGExtraction(graph=graph, diagnostics=diagnostics)

    async def summarize(self, document: Document, template_name: str = "process_summary") -> str:
        """Stage one of Generation 2: process-centric summary"""
        if document.is_empty:
            raise EmptyInput(f"document {document.id}")
        template = get_template(template_name, self.templates_dir)
        prompt = render(
            template,
            document_text(document),
            {"document_title": document.title or document.id},
            chain_of_thought=self.chain_of_thought,
        )
        response = await self.gateway.complete(
            ChatRequest.from_prompt(prompt.text, self.provider, template_name=template.name)
        )
        summary = response.content.strip()
        if not summary:
            raise ParseFailure(SUMMARY_SECTION, "empty summary")
        return summary

    async def summary_to_graph(
        self, document_id: str, summary: str, template_name: str = "summary_to_kg"
    ) -> Tuple[KnowledgeGraph, List[str]]:
        """Stage two of Generation 2, with a single strict-format retry"""
        template = get_template(template_name, self.templates_dir)
        prompt = render(template, summary)
        provenance = Provenance(section=SUMMARY_SECTION, pipeline=Pipeline.GEN2)
        diagnostics: List[str] = []

        for system in (None, STRICT_FORMAT_REMINDER):
            request = ChatRequest.from_prompt(prompt.text, self.provider, system=system, template_name=template.name)
            response = await self.gateway.complete(request)
            try:
                return parse_kg_json(response.content, provenance, document_id), diagnostics
            except (ContractError, EmptyLabel) as e:
                if system is not None:
                    logger.error("Graph conversion failed after retry", document_id=document_id, error=str(e))
                    raise ParseFailure(SUMMARY_SECTION, str(e)) from e
                diagnostics.append(f"summary graph unreadable, re-prompted with a format reminder: {e}")
                logger.warning("Retrying graph conversion", document_id=document_id, error=str(e))
        raise AssertionError("unreachable")

    async def gen2_extract(self, document: Document) -> KGExtraction:
        """Summary-based extraction; the summary is returned alongside the graph"""
        logger.info("Generation 2 extraction", document_id=document.id)
        summary = await self.summarize(document)
        graph, diagnostics = await self.summary_to_graph(document.id, summary)
        logger.info(
            "Generation 2 graph built",
            document_id=document.id,
            nodes=len(graph.nodes),
            edges=len(graph.edges),
            summary_characters=len(summary),
        )
        return KGExtraction(graph=graph, summary=summary, diagnostics=diagnostics)
