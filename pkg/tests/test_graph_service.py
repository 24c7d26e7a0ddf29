import json
import random

import pytest
from pydantic import ValidationError

from app.core.errors import DanglingEdge, EmptyLabel, SchemaViolation
from app.models.graph import Edge, KnowledgeGraph, Node, Pipeline, Provenance
from app.services.graph_service import (
    export_dot,
    from_triplets,
    merge_graphs,
    normalize_entity,
    parse_kg_json,
    parse_triplets_payload,
    rubric_report,
    rubric_to_text,
    serialize_kg_json,
)

GEN1 = Provenance(section="Methods", pipeline=Pipeline.GEN1)
WORDS = ["Ti-6Al-4V", "Alpha Phase", "beta phase", "Etching", "Kroll's reagent", "grain size", "920 MPa", "Polishing"]
RELATIONS = ["has", "related to", "etched in", "produces", "measured as"]
CATEGORIES = [None, "material", "process", "property", "result", "phase"]


def random_graph(rng: random.Random) -> KnowledgeGraph:
    labels = rng.sample(WORDS, rng.randint(0, len(WORDS)))
    nodes = [
        Node(
            id=normalize_entity(label),
            label=label,
            category=rng.choice(CATEGORIES),
            attributes={"weight": rng.randint(0, 3)} if rng.random() < 0.3 else {},
        )
        for label in labels
    ]
    edges = []
    if nodes:
        for _ in range(rng.randint(0, 10)):
            head, tail = rng.choice(nodes), rng.choice(nodes)
            provenance = rng.choice([None, GEN1, Provenance(section="summary", pipeline=Pipeline.GEN2)])
            edges.append(Edge(head_id=head.id, relation=rng.choice(RELATIONS), tail_id=tail.id, provenance=provenance))
    unique = {e.key: e for e in reversed(edges)}
    return KnowledgeGraph(nodes=nodes, edges=list(unique.values()), source_document_id="doc")


def assert_integrity(graph: KnowledgeGraph):
    ids = [n.id for n in graph.nodes]
    assert len(ids) == len(set(ids))
    for edge in graph.edges:
        assert edge.head_id in ids and edge.tail_id in ids


@pytest.mark.parametrize(
    "label, expected",
    [("Ti-6Al-4V Alloy ", "ti-6al-4v alloy"), ("x", "x"), ("Beta  Phase", "beta phase"), ("'Etching.'", "etching")],
)
def test_normalize_entity(label, expected):
    assert normalize_entity(label) == expected
    assert normalize_entity(expected) == expected


def test_normalize_entity_folds_case_and_space():
    assert normalize_entity("Beta  Phase") == normalize_entity("beta phase")


@pytest.mark.parametrize("label", ["", "   ", "...", " ;: "])
def test_normalize_entity_empty(label):
    with pytest.raises(EmptyLabel):
        normalize_entity(label)


def test_from_triplets_single():
    graph = from_triplets([("Ti-6Al-4V", "etched in", "Kroll's reagent")], GEN1)
    assert len(graph.nodes) == 2
    assert graph.triplets() == [("ti-6al-4v", "etched in", "kroll's reagent")]
    assert graph.edges[0].provenance == GEN1
    assert graph.node("ti-6al-4v").label == "Ti-6Al-4V"


def test_from_triplets_empty():
    graph = from_triplets([])
    assert graph.nodes == [] and graph.edges == []


def test_from_triplets_deduplicates_normalized_mentions():
    graph = from_triplets([("a", "r", "b"), ("A", "r", "b")])
    assert len(graph.nodes) == 2
    assert len(graph.edges) == 1


def test_from_triplets_order_independent():
    triplets = [("Ti-6Al-4V", "etched in", "Kroll's reagent"), ("ti-6al-4v", "has", "Alpha phase"), ("a", "r", "b")]
    forward = from_triplets(triplets)
    backward = from_triplets(list(reversed(triplets)))
    assert {n.id for n in forward.nodes} == {n.id for n in backward.nodes}
    assert forward.triplets() == backward.triplets()


def test_graph_rejects_dangling_edge():
    with pytest.raises(ValueError):
        KnowledgeGraph(nodes=[Node(id="a", label="a")], edges=[Edge(head_id="a", relation="r", tail_id="b")])


def test_node_id_must_be_normalized_label():
    with pytest.raises(ValidationError):
        Node(id="Alloy", label="Alloy")
    with pytest.raises(ValidationError):
        Node(id="n1", label="Kroll's reagent")
    assert Node(id="kroll's reagent", label="Kroll's reagent.").id == "kroll's reagent"


def test_node_category_is_lowercased():
    assert Node(id="x", label="X", category=" Material ").category == "material"
    assert Node(id="x", label="X", category="").category is None


def test_directly_built_graph_survives_round_trip():
    graph = KnowledgeGraph(
        nodes=[
            Node(id="ti-6al-4v", label="Ti-6Al-4V", category="Material"),
            Node(id="etching", label="Etching", category="PROCESS"),
        ],
        edges=[Edge(head_id="ti-6al-4v", relation="undergoes", tail_id="etching", provenance=GEN1)],
        source_document_id="ti_alloy",
    )
    assert parse_kg_json(serialize_kg_json(graph)) == graph


def test_parse_kg_json_remaps_model_ids():
    text = json.dumps(
        {
            "nodes": [
                {"id": "n1", "label": "Ti-6Al-4V", "category": "Material"},
                {"id": "n2", "label": "Etching", "category": "process"},
            ],
            "edges": [{"head": "n1", "relation": "undergoes", "tail": "n2"}],
        }
    )
    graph = parse_kg_json(text)
    assert graph.triplets() == [("ti-6al-4v", "undergoes", "etching")]
    assert graph.node("ti-6al-4v").category == "material"


def test_parse_kg_json_dangling_edge():
    text = '{"nodes": [{"id": "a", "label": "a"}], "edges": [{"head": "a", "relation": "r", "tail": "ghost"}]}'
    with pytest.raises(DanglingEdge) as excinfo:
        parse_kg_json(text)
    assert (excinfo.value.endpoint, excinfo.value.node_id) == ("tail", "ghost")


@pytest.mark.parametrize(
    "text, path",
    [
        ("not json at all", "$"),
        ('{"edges": []}', "$.nodes"),
        ('{"nodes": [], "edges": {}}', "$.edges"),
        ('{"nodes": [{"label": ""}], "edges": []}', "$.nodes[0].id"),
        ('{"nodes": [{"id": "a", "label": "a"}], "edges": [{"head": "a", "tail": "a"}]}', "$.edges[0].relation"),
    ],
)
def test_parse_kg_json_schema_violations(text, path):
    with pytest.raises(SchemaViolation) as excinfo:
        parse_kg_json(text)
    assert excinfo.value.path == path


def test_parse_kg_json_strips_code_fences(read_fixture):
    graph = parse_kg_json(read_fixture("responses/gen2_kg.md"))
    assert len(graph.nodes) == 8
    assert len(graph.edges) == 7


def test_parse_kg_json_finds_payload_inside_prose():
    text = 'Here is the graph: {"nodes": [{"id": "x", "label": "X"}], "edges": []} Hope this helps.'
    assert [n.id for n in parse_kg_json(text).nodes] == ["x"]


def test_parse_triplet_shapes(read_fixture):
    objects = parse_triplets_payload(json.loads(read_fixture("responses/gen1_triplets.json")))
    arrays = parse_triplets_payload([["Ti-6Al-4V alloy", "etched in", "Kroll's reagent"]])
    wrapped = parse_triplets_payload({"triplets": [{"subject": "a", "predicate": "r", "object": "b"}]})
    assert len(objects.edges) == 7
    assert arrays.triplets() == [("ti-6al-4v alloy", "etched in", "kroll's reagent")]
    assert wrapped.triplets() == [("a", "r", "b")]
    with pytest.raises(SchemaViolation):
        parse_triplets_payload([["only", "two"]])


def test_serialize_is_canonical():
    graph = from_triplets([("b", "r", "a"), ("a", "r", "c")], GEN1, source_document_id="doc")
    text = serialize_kg_json(graph)
    payload = json.loads(text)
    assert [n["id"] for n in payload["nodes"]] == ["a", "b", "c"]
    assert [(e["head"], e["tail"]) for e in payload["edges"]] == [("a", "c"), ("b", "a")]
    assert payload["edges"][0]["provenance"] == {"pipeline": "gen1", "section": "Methods"}


def test_merge_identity_and_idempotence():
    graph = from_triplets([("a", "r", "b")], GEN1, source_document_id="doc")
    assert merge_graphs(graph, KnowledgeGraph(source_document_id="doc")) == graph
    assert merge_graphs(graph, graph) == graph


def test_merge_first_writer_wins_with_diagnostic():
    a = KnowledgeGraph(nodes=[Node(id="x", label="X", category="material", attributes={"k": 1})])
    b = KnowledgeGraph(nodes=[Node(id="x", label="x", category="process", attributes={"k": 2, "j": 3})])
    diagnostics = []
    merged = merge_graphs(a, b, diagnostics=diagnostics)
    node = merged.node("x")
    assert node.category == "material"
    assert node.attributes == {"k": 1, "j": 3}
    assert any("'k'" in d for d in diagnostics)


def test_merge_fills_missing_category():
    a = KnowledgeGraph(nodes=[Node(id="x", label="X")])
    b = KnowledgeGraph(nodes=[Node(id="x", label="X", category="phase")])
    assert merge_graphs(a, b).node("x").category == "phase"


def test_merge_of_generations_dedups(read_fixture):
    gen1 = parse_triplets_payload(json.loads(read_fixture("responses/gen1_triplets.json")), GEN1, "ti")
    gen2 = parse_kg_json(read_fixture("responses/gen2_kg.md"), source_document_id="ti")
    merged = merge_graphs(gen1, gen2)
    assert len(merged.nodes) <= len(gen1.nodes) + len(gen2.nodes)
    assert len(merged.edges) == len(gen1.edges) + len(gen2.edges)
    assert merged.node("kroll's reagent") is not None


def test_random_graphs_round_trip_and_merge():
    rng = random.Random(1234)
    empty = KnowledgeGraph(source_document_id="doc")
    for _ in range(500):
        graph = random_graph(rng)
        other = random_graph(rng)
        text = serialize_kg_json(graph)
        parsed = parse_kg_json(text)
        assert parsed == graph
        assert serialize_kg_json(parsed) == text
        assert merge_graphs(graph, graph) == graph
        assert merge_graphs(graph, empty) == graph
        assert merge_graphs(empty, graph) == graph
        merged = merge_graphs(graph, other)
        assert_integrity(merged)
        assert {e.key for e in merged.edges} == {e.key for e in graph.edges} | {e.key for e in other.edges}


def test_export_dot_empty():
    dot = export_dot(KnowledgeGraph())
    assert dot.startswith("digraph kg {")
    assert dot.rstrip().endswith("}")
    assert "->" not in dot


def test_export_dot_single_edge():
    graph = from_triplets([("Ti-6Al-4V", "etched in", "Kroll's reagent")])
    dot = export_dot(graph)
    assert '  "ti-6al-4v" -> "kroll\'s reagent" [label="etched in"];' in dot.splitlines()


def test_export_dot_escapes_and_styles():
    graph = KnowledgeGraph(
        nodes=[Node(id='say "hi" now', label='Say "hi"\nnow', category="process"), Node(id="b", label="B")],
        edges=[Edge(head_id='say "hi" now', relation='a\\b', tail_id="b")],
    )
    dot = export_dot(graph)
    assert '"say \\"hi\\" now" [label="Say \\"hi\\"\\nnow", shape=ellipse' in dot
    assert '[label="a\\\\b"]' in dot
    assert export_dot(graph) == dot


def test_rubric_proxies():
    graph = from_triplets([("a", "related to", "b"), ("b", "related to", "c")])
    report = rubric_report(graph)
    assert len(report.principles) == 8
    by_number = {p.number: p for p in report.principles}
    assert by_number[4].automated_proxy_score == 1.0
    assert by_number[8].automated_proxy_score == 0.0
    assert by_number[7].automated_proxy_score == 1.0
    assert {p.number for p in report.principles if p.automated_proxy_score == "manual"} == {3, 5, 6}
    assert by_number[3].notes == ""
    assert report.stats.node_count == 3
    assert report.stats.edge_count == 2
    assert report.stats.connected_components == 1
    assert report.stats.isolated_nodes == 0


def test_rubric_isolated_nodes_and_categories():
    graph = KnowledgeGraph(
        nodes=[
            Node(id="etching", label="Etching", category="process"),
            Node(id="grain size", label="grain size", category="property"),
            Node(id="alloy", label="alloy", category="material"),
            Node(id="lonely", label="lonely"),
        ],
        edges=[
            Edge(head_id="alloy", relation="undergoes", tail_id="etching"),
            Edge(head_id="alloy", relation="has", tail_id="grain size"),
        ],
    )
    by_number = {p.number: p.automated_proxy_score for p in rubric_report(graph).principles}
    assert by_number[1] == 0.5
    assert by_number[2] == 0.5
    assert by_number[4] == 0.75
    assert by_number[7] == 0.75
    assert by_number[8] == 0.5


def test_rubric_empty_graph():
    report = rubric_report(KnowledgeGraph())
    numeric = [p.automated_proxy_score for p in report.principles if p.automated_proxy_score != "manual"]
    assert numeric == [0.0] * 5
    assert report.stats.density == 0.0
    assert "mean automated proxy: 0.0000" in rubric_to_text(report)
