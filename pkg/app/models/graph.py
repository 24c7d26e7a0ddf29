"""
Knowledge graph models: (head, relation, tail) triplets over an entity set
"""

from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Pipeline(str, Enum):
    GEN1 = "gen1"
    GEN2 = "gen2"


class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    section: str = ""
    pipeline: Pipeline


END_PUNCTUATION = ".,;:!?'\"`*"


def entity_key(label: str) -> str:
    """Case-folded, whitespace-collapsed label with end punctuation trimmed; may be empty"""
    return " ".join(label.casefold().split()).strip(END_PUNCTUATION + " ")


class Node(BaseModel):
    """Entity; id is the normalized label, category is lowercase"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    label: str = Field(min_length=1)
    category: Optional[str] = None
    attributes: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("category")
    @classmethod
    def lowercase_category(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return None
        return v.strip().lower() or None

    @model_validator(mode="after")
    def id_is_normalized_label(self) -> "Node":
        expected = entity_key(self.label)
        if self.id != expected:
            raise ValueError(f"node id {self.id!r} must be the normalized label {expected!r}")
        return self


class Edge(BaseModel):
    """Relation-labeled directed edge"""
    model_config = ConfigDict(frozen=True)

    head_id: str
    relation: str = Field(min_length=1)
    tail_id: str
    provenance: Optional[Provenance] = None

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.head_id, self.relation, self.tail_id)


class KnowledgeGraph(BaseModel):
    """Node set plus edge list, kept in canonical order

    Nodes are sorted by id and edges by (head, relation, tail), so equal
    graphs compare equal and serialize identically.
    """
    nodes: List[Node] = Field(default_factory=list)
    edges: List[Edge] = Field(default_factory=list)
    source_document_id: str = ""

    @model_validator(mode="after")
    def referential_integrity(self) -> "KnowledgeGraph":
        ids = [n.id for n in self.nodes]
        known = set(ids)
        if len(known) != len(ids):
            raise ValueError("duplicate node ids")
        for edge in self.edges:
            if edge.head_id not in known or edge.tail_id not in known:
                raise ValueError(f"edge {edge.key} has an unresolved endpoint")
        self.nodes = sorted(self.nodes, key=lambda n: n.id)
        self.edges = sorted(self.edges, key=lambda e: e.key)
        return self

    def node(self, node_id: str) -> Optional[Node]:
        return next((n for n in self.nodes if n.id == node_id), None)

    def triplets(self) -> List[Tuple[str, str, str]]:
        return [e.key for e in self.edges]


class PrincipleScore(BaseModel):
    """One qualitative principle with its structural proxy, if any"""
    number: int = Field(ge=1, le=8)
    name: str
    description: str
    automated_proxy_score: Union[float, Literal["manual"]]
    notes: str = ""


class GraphStats(BaseModel):
    node_count: int
    edge_count: int
    connected_components: int
    isolated_nodes: int
    density: float


class RubricReport(BaseModel):
    """Eight-principle knowledge graph review sheet"""
    source_document_id: str = ""
    principles: List[PrincipleScore]
    stats: GraphStats

    @model_validator(mode="after")
    def eight_principles(self) -> "RubricReport":
        if len(self.principles) != 8:
            raise ValueError("a rubric report has exactly 8 principles")
        return self

    @property
    def mean_automated_proxy(self) -> float:
        scores = [p.automated_proxy_score for p in self.principles if p.automated_proxy_score != "manual"]
        return sum(scores) / len(scores) if scores else 0.0


class KGExtraction(BaseModel):
    """Outcome of a graph pipeline run"""
    graph: KnowledgeGraph
    summary: Optional[str] = None
    diagnostics: List[str] = Field(default_factory=list)
