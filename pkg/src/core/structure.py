"""
Topological structure: dependency loops, acyclicity of the mention-connected
part of the network, and per-ecosystem largest connected components.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Set

import networkx as nx

from src.core.graph import DependencyGraph, NodeId, induced_subgraph
from src.core.ingest import Ecosystem


@dataclass
class SccReport:
    """Strongly connected components and dependency-loop participation."""

    components: List[FrozenSet[NodeId]]
    loop_packages: Set[NodeId]
    loop_fraction: float

    def loops(self) -> List[FrozenSet[NodeId]]:
        """Components of size >= 2, largest first."""
        return [c for c in self.components if len(c) >= 2]

    def loop_fraction_for(self, packages: Iterable[NodeId]) -> float:
        """Share of ``packages`` sitting in a dependency loop; 0.0 when empty."""
        packages = set(packages)
        if not packages:
            return 0.0
        return len(packages & self.loop_packages) / len(packages)


@dataclass
class AcyclicityReport:
    acyclic: bool
    witness_cycle: Optional[List[NodeId]] = None


@dataclass
class ComponentReport:
    """Weakly connected components of one ecosystem's slice of the graph."""

    ecosystem: Ecosystem
    component_sizes: List[int] = field(default_factory=list)
    lcc_nodes: Set[NodeId] = field(default_factory=set)

    @property
    def is_empty(self) -> bool:
        return not self.component_sizes


def _component_order(component) -> tuple:
    return (-len(component), min(component))


def strongly_connected_components(graph: DependencyGraph) -> SccReport:
    """
    Exact SCC partition of the graph.

    Paper nodes have no in-edges and always form singletons. Loop statistics
    count package nodes only.
    """
    components = sorted(
        (frozenset(c) for c in nx.strongly_connected_components(graph.nx_graph)),
        key=_component_order,
    )
    loop_packages = {
        node
        for component in components
        if len(component) >= 2
        for node in component
        if not node.is_paper
    }
    n_packages = len(graph.packages())
    loop_fraction = len(loop_packages) / n_packages if n_packages else 0.0
    return SccReport(components, loop_packages, loop_fraction)


def assert_mention_components_acyclic(graph: DependencyGraph) -> AcyclicityReport:
    """
    Check that dependency edges inside mention-connected components form a DAG.

    Only weakly connected components holding at least one paper are examined.
    When a cycle exists, one witness is returned closed on its first node,
    e.g. ``[A, B, A]``.
    """
    g = graph.nx_graph
    mentioned: Set[NodeId] = set()
    for component in nx.weakly_connected_components(g):
        if any(node.is_paper for node in component):
            mentioned.update(node for node in component if not node.is_paper)

    if not mentioned:
        return AcyclicityReport(acyclic=True)

    packages = g.subgraph(mentioned)
    try:
        cycle_edges = nx.find_cycle(packages, source=sorted(mentioned))
    except nx.NetworkXNoCycle:
        return AcyclicityReport(acyclic=True)

    witness = [u for u, _ in cycle_edges]
    witness.append(witness[0])
    return AcyclicityReport(acyclic=False, witness_cycle=witness)


def ecosystem_slice(graph: DependencyGraph, ecosystem: Ecosystem) -> DependencyGraph:
    """One ecosystem's package nodes plus the papers that mention them."""
    members = set(graph.packages(ecosystem))
    for node in list(members):
        members.update(p for p in graph.predecessors(node) if p.is_paper)
    return induced_subgraph(graph, members.__contains__)


def largest_connected_component(
    graph: DependencyGraph, ecosystem: Ecosystem
) -> ComponentReport:
    """
    Largest weakly connected component of an ecosystem's slice.

    Papers act as connectors between packages they both mention. Ties between
    equal-size components go to the one holding the lexicographically smallest
    node key.
    """
    piece = ecosystem_slice(graph, ecosystem)
    if piece.number_of_nodes() == 0:
        return ComponentReport(ecosystem)

    components = sorted(
        nx.weakly_connected_components(piece.nx_graph),
        key=lambda c: (-len(c), min(node.key for node in c)),
    )
    return ComponentReport(
        ecosystem=ecosystem,
        component_sizes=[len(c) for c in components],
        lcc_nodes=set(components[0]),
    )
