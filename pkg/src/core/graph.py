"""
Two-mode paper/package network.

Papers point at the packages they mention (weight = citation count of the
paper), packages point at the packages they require (weight 1). The graph is
frozen once built; analyses share it read-only.
"""

import logging
import warnings
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from src.core.errors import EmptyInputError, GraphDataWarning, InputFormatError
from src.core.ingest import (
    CitationMap,
    Ecosystem,
    MentionRecord,
    PackageIndex,
    RejectReport,
    fold_package_name,
)

logger = logging.getLogger(__name__)


class NodeClass(str, Enum):
    """The four node classes of the network."""

    PAPER = "paper"
    BIOCONDUCTOR = "bioconductor"
    CRAN = "cran"
    PYPI = "pypi"

    @classmethod
    def for_ecosystem(cls, ecosystem: Ecosystem) -> "NodeClass":
        return cls(ecosystem.value)

    @property
    def ecosystem(self) -> Optional[Ecosystem]:
        if self is NodeClass.PAPER:
            return None
        return Ecosystem(self.value)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class NodeId:
    """DOI for papers, ecosystem package identifier for packages."""

    node_class: NodeClass
    key: str

    @classmethod
    def paper(cls, doi: str) -> "NodeId":
        return cls(NodeClass.PAPER, doi)

    @classmethod
    def package(cls, ecosystem: Ecosystem, key: str) -> "NodeId":
        return cls(NodeClass.for_ecosystem(ecosystem), key)

    @property
    def is_paper(self) -> bool:
        return self.node_class is NodeClass.PAPER

    @property
    def ecosystem(self) -> Optional[Ecosystem]:
        return self.node_class.ecosystem

    def __str__(self) -> str:
        return f"{self.node_class.value}:{self.key}"


@dataclass(frozen=True)
class Edge:
    source: NodeId
    target: NodeId
    weight: float


class GraphVariant(str, Enum):
    """Edge-weighting / node-set variants used for centrality."""

    UNWEIGHTED = "unweighted"
    WEIGHTED = "weighted"
    WEIGHTED_LCC = "weighted_lcc"

    def __str__(self) -> str:
        return self.value


class DependencyGraph:
    """
    Immutable directed weighted graph over paper and package nodes.

    Node attributes: ``name``, ``metadata_missing``, ``citations_unknown`` and
    ``extra`` (attributes carried through from GEXF input). Mention counts are
    derived from the edges, so they always equal the in-degree from papers.
    """

    def __init__(self, graph: nx.DiGraph):
        self._validate(graph)
        self._g = nx.freeze(graph.copy())

    @staticmethod
    def _validate(graph: nx.DiGraph) -> None:
        for u, v, data in graph.edges(data=True):
            if not isinstance(u, NodeId) or not isinstance(v, NodeId):
                raise InputFormatError(f"edge {u} -> {v} does not use NodeId endpoints")
            if v.is_paper:
                raise InputFormatError(f"edge {u} -> {v} points into a paper node")
            if u == v:
                raise InputFormatError(f"self-loop on {u}")
            if not u.is_paper and u.node_class is not v.node_class:
                raise InputFormatError(f"dependency edge {u} -> {v} crosses ecosystems")
            weight = data.get("weight", 1.0)
            if weight < 0:
                raise InputFormatError(f"negative weight {weight} on {u} -> {v}")

    @property
    def nx_graph(self) -> nx.DiGraph:
        """Frozen networkx view; mutation raises."""
        return self._g

    def nodes(self) -> List[NodeId]:
        return sorted(self._g.nodes)

    def papers(self) -> List[NodeId]:
        return sorted(n for n in self._g.nodes if n.is_paper)

    def packages(self, ecosystem: Optional[Ecosystem] = None) -> List[NodeId]:
        return sorted(
            n
            for n in self._g.nodes
            if not n.is_paper and (ecosystem is None or n.ecosystem is ecosystem)
        )

    def edges(self) -> List[Edge]:
        return [
            Edge(u, v, float(data.get("weight", 1.0)))
            for u, v, data in sorted(self._g.edges(data=True), key=lambda e: (e[0], e[1]))
        ]

    def weight(self, source: NodeId, target: NodeId) -> float:
        return float(self._g.edges[source, target].get("weight", 1.0))

    def successors(self, node: NodeId) -> List[NodeId]:
        return sorted(self._g.successors(node))

    def predecessors(self, node: NodeId) -> List[NodeId]:
        return sorted(self._g.predecessors(node))

    def attrs(self, node: NodeId) -> Dict[str, object]:
        return dict(self._g.nodes[node])

    def name(self, node: NodeId) -> str:
        return str(self._g.nodes[node].get("name") or node.key)

    def mention_count(self, node: NodeId) -> int:
        return sum(1 for u in self._g.predecessors(node) if u.is_paper)

    def class_counts(self) -> Dict[str, int]:
        counts = Counter(n.node_class.value for n in self._g.nodes)
        return {cls.value: counts.get(cls.value, 0) for cls in NodeClass}

    def edge_counts(self) -> Dict[str, int]:
        mentions = sum(1 for u, _ in self._g.edges if u.is_paper)
        return {"mention": mentions, "dependency": self._g.number_of_edges() - mentions}

    def number_of_nodes(self) -> int:
        return self._g.number_of_nodes()

    def number_of_edges(self) -> int:
        return self._g.number_of_edges()

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self._g)

    def with_unit_weights(self) -> "DependencyGraph":
        """Copy with every edge weight set to 1 (the unweighted variant)."""
        g = self._g.copy()
        nx.set_edge_attributes(g, 1.0, "weight")
        return DependencyGraph(g)

    def __contains__(self, node: NodeId) -> bool:
        return node in self._g

    def __len__(self) -> int:
        return self._g.number_of_nodes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, DependencyGraph):
            return NotImplemented
        return set(self._g.nodes) == set(other._g.nodes) and self.edges() == other.edges()

    def __repr__(self) -> str:
        return f"DependencyGraph({self.class_counts()}, edges={self.number_of_edges()})"


@dataclass
class BuildConfig:
    ecosystems: Tuple[Ecosystem, ...] = tuple(Ecosystem)


@dataclass
class BuildReport:
    """What build_graph did with imperfect inputs."""

    dangling_dependencies: List[Tuple[str, str]] = field(default_factory=list)
    unresolved_mentions: List[Tuple[str, str]] = field(default_factory=list)
    papers_without_citations: List[str] = field(default_factory=list)
    self_dependencies: List[Tuple[str, str]] = field(default_factory=list)
    rejects: List[RejectReport] = field(default_factory=list)

    def render(self, graph: DependencyGraph) -> str:
        lines = ["# build report", "", "## node counts"]
        for node_class, count in graph.class_counts().items():
            lines.append(f"{node_class}: {count}")
        lines += ["", "## edge counts"]
        for kind, count in graph.edge_counts().items():
            lines.append(f"{kind}: {count}")

        lines += ["", f"## missing metadata ({len(self.dangling_dependencies)})"]
        lines += [f"{eco}/{name}" for eco, name in self.dangling_dependencies]
        lines += ["", f"## mentioned packages without registry record ({len(self.unresolved_mentions)})"]
        lines += [f"{eco}/{key}" for eco, key in self.unresolved_mentions]
        lines += ["", f"## papers lacking citation data ({len(self.papers_without_citations)})"]
        lines += self.papers_without_citations
        lines += ["", f"## dropped self-dependencies ({len(self.self_dependencies)})"]
        lines += [f"{eco}/{name}" for eco, name in self.self_dependencies]
        lines += ["", "## rejected input rows"]
        for report in self.rejects:
            lines.append(report.summary())
            lines += [f"  row {r.row_number}: {r.reason}" for r in report.rows]
        return "\n".join(lines) + "\n"


NameAliases = Mapping[Tuple[Ecosystem, str], NodeId]


def package_node(
    index: PackageIndex,
    ecosystem: Ecosystem,
    name: str,
    aliases: Optional[NameAliases] = None,
) -> NodeId:
    """
    Node for a dependency name.

    Registry records win; then ``aliases`` (folded name -> node of a mentioned
    package with no record); anything else becomes a stub keyed by the folded
    name.
    """
    record = index.lookup(ecosystem, name)
    if record is not None:
        return NodeId.package(ecosystem, record.package_id)
    folded = fold_package_name(ecosystem, name)
    if aliases and (ecosystem, folded) in aliases:
        return aliases[(ecosystem, folded)]
    return NodeId.package(ecosystem, folded)


def _direct_dependencies(
    index: PackageIndex, node: NodeId, aliases: Optional[NameAliases] = None
) -> List[NodeId]:
    ecosystem = node.ecosystem
    record = index.get(ecosystem, node.key)
    if record is None:
        return []
    targets = []
    for dep in record.dependencies:
        target = package_node(index, ecosystem, dep, aliases)
        if target != node:
            targets.append(target)
    return targets


def resolve_transitive_dependencies(
    index: PackageIndex,
    roots: Iterable[NodeId],
    aliases: Optional[NameAliases] = None,
) -> Set[NodeId]:
    """
    Breadth-first closure of ``roots`` under the direct-dependency relation.

    Roots are part of the result only when some root reaches them. Names with
    no registry record are returned as stub nodes with no dependencies, or as
    the aliased node when ``aliases`` names them.
    """
    reached: Set[NodeId] = set()
    queue = deque()

    for root in sorted(set(roots)):
        for target in _direct_dependencies(index, root, aliases):
            if target not in reached:
                reached.add(target)
                queue.append(target)

    while queue:
        node = queue.popleft()
        for target in _direct_dependencies(index, node, aliases):
            if target not in reached:
                reached.add(target)
                queue.append(target)

    return reached


def _mentioned_node(index: PackageIndex, mention: MentionRecord) -> Tuple[NodeId, str, bool]:
    record = index.get(mention.ecosystem, mention.package_id)
    if record is None and mention.package_name:
        record = index.lookup(mention.ecosystem, mention.package_name)
    if record is not None:
        return NodeId.package(mention.ecosystem, record.package_id), record.name, False
    name = mention.package_name or mention.package_id
    return NodeId.package(mention.ecosystem, mention.package_id), name, True


def build_graph(
    mentions: Sequence[MentionRecord],
    citations: CitationMap,
    index: PackageIndex,
    config: Optional[BuildConfig] = None,
    report: Optional[BuildReport] = None,
) -> DependencyGraph:
    """
    Build the two-mode network from mentions, citation counts and the registry.

    Args:
        mentions: Parsed mention records
        citations: Citation counts per DOI; absent DOIs give weight-0 mention edges
        index: Registry records used for transitive dependency resolution
        config: Ecosystems to include
        report: Collector for dangling names, missing citations, self-dependencies

    Returns:
        Frozen DependencyGraph
    """
    config = config or BuildConfig()
    report = report if report is not None else BuildReport()

    selected = [m for m in mentions if m.ecosystem in config.ecosystems]
    if not selected:
        raise EmptyInputError("no seed mentions")

    g = nx.DiGraph()
    names: Dict[NodeId, str] = {}
    mention_edges: Set[Tuple[NodeId, NodeId]] = set()
    unresolved = set()
    # dependency names that refer to a mentioned package without a record
    aliases: Dict[Tuple[Ecosystem, str], NodeId] = {}

    for mention in selected:
        node, name, missing = _mentioned_node(index, mention)
        names.setdefault(node, name)
        if missing:
            unresolved.add(node)
            folded = fold_package_name(mention.ecosystem, name)
            aliases.setdefault((mention.ecosystem, folded), node)
        mention_edges.add((NodeId.paper(mention.paper_doi), node))

    roots = {target for _, target in mention_edges}
    packages = roots | resolve_transitive_dependencies(index, roots, aliases)

    for node in sorted(packages):
        record = index.get(node.ecosystem, node.key)
        name = record.name if record is not None else names.get(node, node.key)
        g.add_node(
            node,
            name=name,
            metadata_missing=record is None,
            citations_unknown=False,
            extra={},
        )

    papers = sorted({paper for paper, _ in mention_edges})
    for paper in papers:
        known = paper.key in citations
        g.add_node(
            paper,
            name=paper.key,
            metadata_missing=False,
            citations_unknown=not known,
            extra={},
        )
        if not known:
            report.papers_without_citations.append(paper.key)

    for paper, package in sorted(mention_edges):
        g.add_edge(paper, package, weight=float(citations.get(paper.key) or 0))

    for node in sorted(packages):
        record = index.get(node.ecosystem, node.key)
        if record is None:
            continue
        for dep in record.dependencies:
            target = package_node(index, node.ecosystem, dep, aliases)
            if target == node:
                report.self_dependencies.append((node.ecosystem.value, record.name))
                warnings.warn(
                    f"{node}: package lists itself as a dependency; dropped",
                    GraphDataWarning,
                    stacklevel=2,
                )
                continue
            g.add_edge(node, target, weight=1.0)

    report.unresolved_mentions = sorted(
        (n.ecosystem.value, n.key) for n in unresolved
    )
    report.dangling_dependencies = sorted(
        (n.ecosystem.value, n.key)
        for n in packages
        if n not in unresolved and index.get(n.ecosystem, n.key) is None
    )

    if report.papers_without_citations:
        warnings.warn(
            f"{len(report.papers_without_citations)} papers have no citation data; "
            "their mention edges get weight 0",
            GraphDataWarning,
            stacklevel=2,
        )
    if report.dangling_dependencies:
        logger.info(
            f"{len(report.dangling_dependencies)} dependencies added as metadata-missing stubs"
        )

    return DependencyGraph(g)


def induced_subgraph(
    graph: DependencyGraph, node_predicate: Callable[[NodeId], bool]
) -> DependencyGraph:
    """Nodes satisfying the predicate and every edge among them."""
    keep = [node for node in graph.nodes() if node_predicate(node)]
    return DependencyGraph(graph.nx_graph.subgraph(keep).copy())
