"""
Knowledge graph operations: entity normalization, triplet construction,
JSON codec, merging, DOT export and the rubric report
"""

import json
import re
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import structlog

from app.core.errors import DanglingEdge, EmptyLabel, SchemaViolation
from app.models.document import Document
from app.models.graph import (
    Edge,
    GraphStats,
    KnowledgeGraph,
    Node,
    PrincipleScore,
    Provenance,
    entity_key,
    RubricReport,
)

logger = structlog.get_logger(__name__)

CODE_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\s*\n?(?P<body>.*?)```", re.DOTALL)
GENERIC_RELATIONS = {"related to", "has"}

PROCESS_CATEGORIES = {"process"}
FINDING_CATEGORIES = {"result", "property"}

CATEGORY_STYLE = {
    "material": ("box", "#DCE9ED"),
    "process": ("ellipse", "#F4E5AD"),
    "property": ("note", "#E8EED2"),
    "result": ("doubleoctagon", "#F6D5D5"),
    "condition": ("parallelogram", "#E6E0F2"),
    "phase": ("hexagon", "#D9EAD3"),
}
DEFAULT_STYLE = ("oval", "#FFFFFF")

PRINCIPLES = [
    ("Clarity of Experimental Process", "Clearly outline experimental procedures used to study material microstructures."),
    ("Showcase Key Findings", "Highlight and emphasize key discoveries and important results derived from experiments."),
    ("Microstructure Context", "Provide detailed context about material microstructures, including phases, defects, and interfaces."),
    ("Connect Microstructural Elements", "Establish strong connections between different components of material microstructures."),
    ("Diverse Data Sources", "Gather information from experiments, simulations, and theories for a comprehensive view."),
    ("Clarity in Terminology", "Ensure clarity and that terms are free of human bias."),
    ("Structured Understanding", "Map relationships among microstructural elements as described in the text."),
    ("Insightful Representation", "Enable easy extraction of critical material insights from the graph."),
]


def normalize_entity(label: str) -> str:
    """Case-fold, collapse whitespace, trim punctuation at both ends"""
    normalized = entity_key(label)
    if not normalized:
        raise EmptyLabel(label)
    return normalized


def normalize_relation(relation: str) -> str:
    return " ".join(relation.split())


class GraphBuilder:
    """Accumulates nodes and edges; first writer wins"""

    def __init__(self, source_document_id: str = "", diagnostics: Optional[List[str]] = None):
        self.source_document_id = source_document_id
        self.nodes: Dict[str, Node] = {}
        self.edges: Dict[Tuple[str, str, str], Edge] = {}
        self.diagnostics = diagnostics if diagnostics is not None else []

    def add_node(self, node: Node) -> str:
        existing = self.nodes.get(node.id)
        if existing is None:
            self.nodes[node.id] = node
            return node.id

        attributes = dict(existing.attributes)
        for key, value in node.attributes.items():
            if key in attributes and attributes[key] != value:
                note = f"node {node.id!r}: attribute {key!r} conflict, kept {attributes[key]!r} over {value!r}"
                self.diagnostics.append(note)
                logger.warning("Node attribute conflict", node_id=node.id, attribute=key)
            else:
                attributes.setdefault(key, value)
        if existing.label != node.label:
            self.diagnostics.append(f"node {node.id!r}: surface form {node.label!r} merged into {existing.label!r}")
        self.nodes[node.id] = existing.model_copy(
            update={"category": existing.category or node.category, "attributes": attributes}
        )
        return node.id

    def add_label(self, label: str, category: Optional[str] = None) -> str:
        return self.add_node(Node(id=normalize_entity(label), label=" ".join(label.split()), category=category))

    def add_edge(self, edge: Edge) -> None:
        self.edges.setdefault(edge.key, edge)

    def build(self) -> KnowledgeGraph:
        return KnowledgeGraph(
            nodes=list(self.nodes.values()),
            edges=list(self.edges.values()),
            source_document_id=self.source_document_id,
        )


def from_triplets(
    triplets: Iterable[Sequence[str]],
    provenance: Optional[Provenance] = None,
    source_document_id: str = "",
) -> KnowledgeGraph:
    """Build a graph from (head, relation, tail) strings"""
    builder = GraphBuilder(source_document_id)
    for head, relation, tail in triplets:
        head_id = builder.add_label(head)
        tail_id = builder.add_label(tail)
        builder.add_edge(
            Edge(head_id=head_id, relation=normalize_relation(relation), tail_id=tail_id, provenance=provenance)
        )
    return builder.build()


def merge_graphs(
    a: KnowledgeGraph,
    b: KnowledgeGraph,
    source_document_id: Optional[str] = None,
    diagnostics: Optional[List[str]] = None,
) -> KnowledgeGraph:
    """Union by node id and edge key; `a` wins every conflict"""
    document_id = source_document_id if source_document_id is not None else a.source_document_id or b.source_document_id
    builder = GraphBuilder(document_id, diagnostics)
    if source_document_id is None and a.source_document_id and b.source_document_id and a.source_document_id != b.source_document_id:
        builder.diagnostics.append(
            f"merged graphs of different documents {a.source_document_id!r} and {b.source_document_id!r}"
        )
        logger.warning("Merging graphs from different documents", a=a.source_document_id, b=b.source_document_id)
    for graph in (a, b):
        for node in graph.nodes:
            builder.add_node(node)
        for edge in graph.edges:
            builder.add_edge(edge)
    return builder.build()


def strip_code_fences(text: str) -> str:
    match = CODE_FENCE.search(text)
    return match.group("body").strip() if match else text.strip()


def extract_json(text: str) -> Any:
    """Decode model output that should be JSON

    Code fences are removed; when prose surrounds the payload the first
    decodable object or array is used.
    """
    body = strip_code_fences(text)
    try:
        return json.loads(body)
    except json.JSONDecodeError:
        pass
    decoder = json.JSONDecoder()
    for index, char in enumerate(body):
        if char in "[{":
            try:
                value, _ = decoder.raw_decode(body, index)
                return value
            except json.JSONDecodeError:
                continue
    raise SchemaViolation("$", "no JSON object or array found")


def _require_str(value: Any, path: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise SchemaViolation(path, "expected a non-empty string")
    return value


def graph_from_payload(
    payload: Any,
    provenance: Optional[Provenance] = None,
    source_document_id: str = "",
) -> KnowledgeGraph:
    """Validate a decoded {nodes, edges} object and build the graph

    Node ids given in the payload (e.g. "n1") are remapped to the
    normalized label; edges must reference declared ids.
    """
    if not isinstance(payload, dict):
        raise SchemaViolation("$", "expected an object with nodes and edges")
    nodes = payload.get("nodes")
    edges = payload.get("edges")
    if not isinstance(nodes, list):
        raise SchemaViolation("$.nodes", "expected an array")
    if not isinstance(edges, list):
        raise SchemaViolation("$.edges", "expected an array")

    builder = GraphBuilder(payload.get("source_document_id") or source_document_id)
    id_map: Dict[str, str] = {}
    for i, raw in enumerate(nodes):
        path = f"$.nodes[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation(path, "expected an object")
        raw_id = raw.get("id", raw.get("label"))
        raw_id = _require_str(raw_id, f"{path}.id")
        label = _require_str(raw.get("label", raw_id), f"{path}.label")
        category = raw.get("category", raw.get("type"))
        attributes = raw.get("attributes") or {}
        if not isinstance(attributes, dict):
            raise SchemaViolation(f"{path}.attributes", "expected an object")
        node = Node(
            id=normalize_entity(label),
            label=label,
            category=category if isinstance(category, str) else None,
            attributes=attributes,
        )
        id_map[raw_id] = builder.add_node(node)

    for i, raw in enumerate(edges):
        path = f"$.edges[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation(path, "expected an object")
        head = _require_str(raw.get("head", raw.get("source")), f"{path}.head")
        tail = _require_str(raw.get("tail", raw.get("target")), f"{path}.tail")
        relation = _require_str(raw.get("relation", raw.get("label")), f"{path}.relation")
        if head not in id_map:
            raise DanglingEdge("head", head)
        if tail not in id_map:
            raise DanglingEdge("tail", tail)
        edge_provenance = provenance
        if isinstance(raw.get("provenance"), dict):
            try:
                edge_provenance = Provenance.model_validate(raw["provenance"])
            except ValueError as e:
                raise SchemaViolation(f"{path}.provenance", str(e)) from e
        builder.add_edge(
            Edge(
                head_id=id_map[head],
                relation=normalize_relation(relation),
                tail_id=id_map[tail],
                provenance=edge_provenance,
            )
        )
    return builder.build()


def parse_kg_json(
    text: str,
    provenance: Optional[Provenance] = None,
    source_document_id: str = "",
) -> KnowledgeGraph:
    """Parse KG JSON (canonical files or raw model output)"""
    return graph_from_payload(extract_json(text), provenance, source_document_id)


def serialize_kg_json(kg: KnowledgeGraph) -> str:
    """Canonical JSON: sorted node ids, sorted edges, sorted keys"""
    payload = {
        "source_document_id": kg.source_document_id,
        "nodes": [
            {"id": n.id, "label": n.label, "category": n.category, "attributes": n.attributes}
            for n in kg.nodes
        ],
        "edges": [
            {
                "head": e.head_id,
                "relation": e.relation,
                "tail": e.tail_id,
                "provenance": e.provenance.model_dump(mode="json") if e.provenance else None,
            }
            for e in kg.edges
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def parse_triplets_payload(
    payload: Any,
    provenance: Optional[Provenance] = None,
    source_document_id: str = "",
) -> KnowledgeGraph:
    """Relation-extraction answers: triplet list or {nodes, edges}"""
    if isinstance(payload, dict):
        if "nodes" in payload:
            return graph_from_payload(payload, provenance, source_document_id)
        for key in ("triplets", "relations", "edges"):
            if isinstance(payload.get(key), list):
                payload = payload[key]
                break
    if not isinstance(payload, list):
        raise SchemaViolation("$", "expected a list of triplets")

    triplets = []
    for i, item in enumerate(payload):
        path = f"$[{i}]"
        if isinstance(item, dict):
            head = item.get("head", item.get("source", item.get("subject")))
            relation = item.get("relation", item.get("predicate"))
            tail = item.get("tail", item.get("target", item.get("object")))
        elif isinstance(item, (list, tuple)) and len(item) == 3:
            head, relation, tail = item
        else:
            raise SchemaViolation(path, "expected a triplet")
        triplets.append(
            (_require_str(head, f"{path}.head"), _require_str(relation, f"{path}.relation"), _require_str(tail, f"{path}.tail"))
        )
    return from_triplets(triplets, provenance, source_document_id)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def export_dot(kg: KnowledgeGraph) -> str:
    """Graphviz digraph with category-driven node styling"""
    lines = ["digraph kg {", "  graph [rankdir=LR];", '  node [fontname="Helvetica", style=filled];']
    for node in kg.nodes:
        shape, color = CATEGORY_STYLE.get(node.category or "", DEFAULT_STYLE)
        lines.append(
            f'  "{_dot_escape(node.id)}" [label="{_dot_escape(node.label)}", shape={shape}, fillcolor="{color}"];'
        )
    for edge in kg.edges:
        lines.append(
            f'  "{_dot_escape(edge.head_id)}" -> "{_dot_escape(edge.tail_id)}" [label="{_dot_escape(edge.relation)}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_networkx(kg: KnowledgeGraph) -> nx.MultiDiGraph:
    graph = nx.MultiDiGraph()
    for node in kg.nodes:
        graph.add_node(node.id, label=node.label, category=node.category)
    for edge in kg.edges:
        graph.add_edge(edge.head_id, edge.tail_id, relation=edge.relation)
    return graph


def graph_stats(kg: KnowledgeGraph) -> GraphStats:
    graph = to_networkx(kg)
    n = graph.number_of_nodes()
    return GraphStats(
        node_count=n,
        edge_count=graph.number_of_edges(),
        connected_components=nx.number_weakly_connected_components(graph) if n else 0,
        isolated_nodes=nx.number_of_isolates(graph),
        density=nx.density(graph) if n > 1 else 0.0,
    )


def _edge_share(kg: KnowledgeGraph, predicate) -> float:
    if not kg.edges:
        return 0.0
    return sum(1 for e in kg.edges if predicate(e)) / len(kg.edges)


def rubric_report(kg: KnowledgeGraph, document: Optional[Document] = None) -> RubricReport:
    """Eight-principle review sheet with structural proxies

    The principles are judged by a reader; numbers here are proxies computed
    from graph structure only, and principles without one are "manual".
    """
    stats = graph_stats(kg)
    categories = {n.id: (n.category or "") for n in kg.nodes}
    graph = to_networkx(kg)

    if stats.node_count:
        largest = max(len(c) for c in nx.weakly_connected_components(graph))
        connected = 1.0 - stats.isolated_nodes / stats.node_count
        structured = largest / stats.node_count
    else:
        connected = structured = 0.0

    proxies: Dict[int, Tuple[Any, str]] = {
        1: (
            _edge_share(kg, lambda e: categories[e.head_id] in PROCESS_CATEGORIES or categories[e.tail_id] in PROCESS_CATEGORIES),
            "share of edges touching a process node",
        ),
        2: (
            _edge_share(kg, lambda e: categories[e.tail_id] in FINDING_CATEGORIES),
            "share of edges ending in a result or property node",
        ),
        3: ("manual", ""),
        4: (connected, "1 - isolated node fraction"),
        5: ("manual", ""),
        6: ("manual", ""),
        7: (structured, "largest weakly connected component / node count"),
        8: (
            _edge_share(kg, lambda e: e.relation.casefold() not in GENERIC_RELATIONS),
            "share of edges with a specific relation",
        ),
    }

    principles = [
        PrincipleScore(number=i, name=name, description=description, automated_proxy_score=proxies[i][0], notes=proxies[i][1])
        for i, (name, description) in enumerate(PRINCIPLES, start=1)
    ]
    source = kg.source_document_id or (document.id if document else "")
    report = RubricReport(source_document_id=source, principles=principles, stats=stats)
    logger.info("Rubric report", document_id=source, mean_proxy=round(report.mean_automated_proxy, 4), **stats.model_dump())
    return report


def rubric_to_text(report: RubricReport) -> str:
    lines = [f"Knowledge graph rubric for {report.source_document_id or '(unknown document)'}", ""]
    for p in report.principles:
        score = p.automated_proxy_score if p.automated_proxy_score == "manual" else f"{p.automated_proxy_score:.3f}"
        lines.append(f"{p.number}. {p.name:<36} {score:>8}  {p.notes}".rstrip())
    s = report.stats
    lines += [
        "",
        f"nodes={s.node_count} edges={s.edge_count} components={s.connected_components} "
        f"isolated={s.isolated_nodes} density={s.density:.4f}",
        f"mean automated proxy: {report.mean_automated_proxy:.4f} (structural proxies, not a quality metric)",
    ]
    return "\n".join(lines) + "\n"
