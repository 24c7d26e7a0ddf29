import pytest

from app.core.errors import EmptyInput, ParseFailure
from app.models.document import Document, Section
from app.models.graph import Pipeline
from app.models.llm import GatewayMode
from app.services.document_service import parse_document
from app.services.fixture_store import FixtureStore
from app.services.graph_service import rubric_report
from app.services.kg_pipeline_service import STRICT_FORMAT_REMINDER, KnowledgeGraphService
from app.services.llm_service import LLMGateway
from app.services.prompt_service import CHAIN_OF_THOUGHT_SUFFIX
from conftest import RELATION_MARKER, SUMMARY_MARKER, SUMMARY_TO_KG_MARKER, ScriptedProvider


@pytest.fixture
def titanium(read_fixture) -> Document:
    return parse_document(read_fixture("ti_alloy.txt"), doc_id="ti_alloy")


async def run(provider, provider_config, method, document, **kwargs):
    async with LLMGateway(mode=GatewayMode.LIVE, client=provider.client()) as gateway:
        service = KnowledgeGraphService(gateway, provider_config, **kwargs)
        return await getattr(service, method)(document)


@pytest.mark.asyncio
async def test_gen1_builds_graph_from_triplets(titanium, provider_config, api_key, pipeline_answers):
    provider = ScriptedProvider(pipeline_answers)
    result = await run(provider, provider_config, "gen1_extract", titanium)

    graph = result.graph
    assert graph.source_document_id == "ti_alloy"
    assert len(graph.edges) == 7
    assert ("ti-6al-4v alloy", "etched in", "kroll's reagent") in graph.triplets()
    assert {e.provenance.pipeline for e in graph.edges} == {Pipeline.GEN1}
    assert {e.provenance.section for e in graph.edges} == {"_preamble"}
    assert result.summary is None
    assert len(provider.requests) == 1


@pytest.mark.asyncio
async def test_gen1_skips_unreadable_section(provider_config, api_key, read_fixture):
    document = Document(
        id="paper",
        sections=[
            Section(heading="Methods", paragraphs=[read_fixture("ti_alloy.txt").strip()]),
            Section(heading="Acknowledgements", paragraphs=["We thank the funding agency."]),
            Section(heading="Empty heading"),
        ],
    )
    provider = ScriptedProvider(
        {"Acknowledgements": "Sorry, no relations here.", RELATION_MARKER: read_fixture("responses/gen1_triplets.json")}
    )
    result = await run(provider, provider_config, "gen1_extract", document)

    assert len(provider.requests) == 2
    assert len(result.graph.edges) == 7
    assert len(result.diagnostics) == 1
    assert "'Acknowledgements'" in result.diagnostics[0]


@pytest.mark.asyncio
async def test_gen1_merges_sections(provider_config, api_key):
    document = Document(
        id="paper",
        sections=[
            Section(heading="Methods", paragraphs=["The alloy was etched."]),
            Section(heading="Results", paragraphs=["Etching revealed the phases."]),
        ],
    )
    provider = ScriptedProvider(
        {
            '"Methods"': '[{"head": "Alloy", "relation": "undergoes", "tail": "Etching"}]',
            '"Results"': '[{"head": "etching", "relation": "reveals", "tail": "phases"}]',
        }
    )
    result = await run(provider, provider_config, "gen1_extract", document)

    assert [n.id for n in result.graph.nodes] == ["alloy", "etching", "phases"]
    assert {e.provenance.section for e in result.graph.edges} == {"Methods", "Results"}


@pytest.mark.asyncio
async def test_gen2_summarizes_then_converts(titanium, provider_config, api_key, pipeline_answers, read_fixture):
    provider = ScriptedProvider(pipeline_answers)
    result = await run(provider, provider_config, "gen2_extract", titanium)

    assert result.summary == read_fixture("responses/gen2_summary.txt").strip()
    assert len(result.graph.nodes) == 8
    assert len(result.graph.edges) == 7
    assert {e.provenance.pipeline for e in result.graph.edges} == {Pipeline.GEN2}
    assert result.diagnostics == []

    first, second = (r["messages"][-1]["content"] for r in provider.requests)
    assert SUMMARY_MARKER in first
    assert SUMMARY_TO_KG_MARKER in second
    assert result.summary in second


@pytest.mark.asyncio
async def test_gen2_retries_once_with_format_reminder(titanium, provider_config, api_key, pipeline_answers):
    answers = dict(pipeline_answers)
    answers[SUMMARY_TO_KG_MARKER] = ["Here you go: nodes and edges!", pipeline_answers[SUMMARY_TO_KG_MARKER]]
    provider = ScriptedProvider(answers)
    result = await run(provider, provider_config, "gen2_extract", titanium)

    assert len(result.graph.edges) == 7
    assert len(result.diagnostics) == 1
    assert "format reminder" in result.diagnostics[0]
    retry = provider.requests[-1]["messages"]
    assert retry[0] == {"role": "system", "content": STRICT_FORMAT_REMINDER}
    assert len(provider.requests) == 3


@pytest.mark.asyncio
async def test_gen2_fails_after_retry(titanium, provider_config, api_key, pipeline_answers):
    answers = dict(pipeline_answers)
    answers[SUMMARY_TO_KG_MARKER] = '{"nodes": [{"id": "n1", "label": "x"}], "edges": [{"head": "n1", "relation": "r", "tail": "n9"}]}'
    provider = ScriptedProvider(answers)
    with pytest.raises(ParseFailure) as excinfo:
        await run(provider, provider_config, "gen2_extract", titanium)
    assert excinfo.value.section == "summary"
    assert len(provider.requests) == 3


@pytest.mark.asyncio
async def test_gen2_empty_summary(titanium, provider_config, api_key, pipeline_answers):
    answers = dict(pipeline_answers)
    answers[SUMMARY_MARKER] = "   "
    with pytest.raises(ParseFailure):
        await run(ScriptedProvider(answers), provider_config, "gen2_extract", titanium)


@pytest.mark.asyncio
async def test_empty_document(provider_config, api_key, pipeline_answers):
    document = Document(id="blank", sections=[Section(heading="Intro")])
    provider = ScriptedProvider(pipeline_answers)

    with pytest.raises(EmptyInput):
        await run(provider, provider_config, "gen2_extract", document)
    result = await run(provider, provider_config, "gen1_extract", document)
    assert result.graph.nodes == [] and result.graph.edges == []
    assert provider.requests == []


@pytest.mark.asyncio
async def test_chain_of_thought_suffix_reaches_provider(titanium, provider_config, api_key, pipeline_answers):
    provider = ScriptedProvider(pipeline_answers)
    await run(provider, provider_config, "gen1_extract", titanium, chain_of_thought=True)
    assert CHAIN_OF_THOUGHT_SUFFIX in provider.requests[0]["messages"][-1]["content"]


@pytest.mark.asyncio
async def test_cached_pipeline_reuses_fixtures(tmp_path, titanium, provider_config, api_key, pipeline_answers):
    provider = ScriptedProvider(pipeline_answers)
    store = FixtureStore(tmp_path)
    graphs = []
    for _ in range(2):
        async with LLMGateway(mode=GatewayMode.CACHE, store=store, client=provider.client()) as gateway:
            graphs.append((await KnowledgeGraphService(gateway, provider_config).gen2_extract(titanium)).graph)

    assert graphs[0] == graphs[1]
    assert len(provider.requests) == 2
    assert len(store.list_entries()) == 2


@pytest.mark.asyncio
async def test_summary_pipeline_scores_higher_on_structure(titanium, provider_config, api_key, pipeline_answers):
    gen1 = await run(ScriptedProvider(pipeline_answers), provider_config, "gen1_extract", titanium)
    gen2 = await run(ScriptedProvider(pipeline_answers), provider_config, "gen2_extract", titanium)

    gen1_report = rubric_report(gen1.graph)
    gen2_report = rubric_report(gen2.graph)
    assert gen2_report.mean_automated_proxy >= gen1_report.mean_automated_proxy
    assert gen1_report.mean_automated_proxy == pytest.approx(0.4343, abs=1e-3)
    assert gen2_report.mean_automated_proxy == pytest.approx(0.8, abs=1e-9)
