"""Graph builders shared by the test modules (plain functions so hypothesis tests can use them)."""

import random
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from src.core.graph import DependencyGraph, NodeClass, NodeId


def cran(key: str) -> NodeId:
    return NodeId(NodeClass.CRAN, key)


def pypi(key: str) -> NodeId:
    return NodeId(NodeClass.PYPI, key)


def bioc(key: str) -> NodeId:
    return NodeId(NodeClass.BIOCONDUCTOR, key)


def paper(doi: str) -> NodeId:
    return NodeId(NodeClass.PAPER, doi)


def _add_node(g: nx.DiGraph, node: NodeId) -> None:
    if node not in g:
        g.add_node(node, name=node.key, metadata_missing=False, citations_unknown=False, extra={})


def make_graph(
    edges: Iterable[Tuple[NodeId, NodeId, float]], nodes: Iterable[NodeId] = ()
) -> DependencyGraph:
    g = nx.DiGraph()
    for node in nodes:
        _add_node(g, node)
    for u, v, w in edges:
        _add_node(g, u)
        _add_node(g, v)
        g.add_edge(u, v, weight=float(w))
    return DependencyGraph(g)


def golden_graph() -> DependencyGraph:
    """One paper cited 3 times mentions A; A requires B."""
    return make_graph([(paper("10.1/p"), cran("A"), 3), (cran("A"), cran("B"), 1)])


def two_cycle() -> DependencyGraph:
    return make_graph([(cran("A"), cran("B"), 1), (cran("B"), cran("A"), 1)])


def random_dag_edges(
    rng: random.Random, n_nodes: int, n_edges: int, max_weight: int = 5
) -> List[Tuple[NodeId, NodeId, float]]:
    """Edges i -> j with i < j among cran packages p00..pNN."""
    nodes = [cran(f"p{i:02d}") for i in range(n_nodes)]
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    chosen = rng.sample(pairs, min(n_edges, len(pairs)))
    return [(nodes[i], nodes[j], rng.randint(0, max_weight)) for i, j in sorted(chosen)]


def brute_force_katz(
    graph: DependencyGraph, beta: float, baseline: float = 1.0
) -> dict:
    """Sum over every directed path u0 -> ... -> v of beta^k * prod(weights) * b[u0]."""
    scores = {node: 0.0 for node in graph.nodes()}

    def walk(node: NodeId, depth: int, product: float) -> None:
        for nxt in graph.successors(node):
            weight = product * graph.weight(node, nxt)
            scores[nxt] += beta ** (depth + 1) * weight * baseline
            walk(nxt, depth + 1, weight)

    for start in graph.nodes():
        walk(start, 0, 1.0)
    return scores


def mirror_network(seed: int = 2023, inject_cycle: bool = False) -> Tuple[DependencyGraph, float]:
    """
    40 cran packages and 100 papers.

    m00..m29 form a DAG reachable from papers (m00 -> m01 always present);
    u00..u09 are never mentioned: u00 <-> u01 and u02 -> u03 -> u04 -> u02 are
    loops, u05..u09 a chain. Loop fraction is 5/40.
    """
    rng = random.Random(seed)
    mentioned = [cran(f"m{i:02d}") for i in range(30)]
    hidden = [cran(f"u{i:02d}") for i in range(10)]

    edges = {(mentioned[0], mentioned[1]): 1}
    for i in range(30):
        for j in range(i + 1, 30):
            if rng.random() < 0.08:
                edges[(mentioned[i], mentioned[j])] = 1

    for i in range(100):
        doi = f"10.5555/mirror.{i:03d}"
        for target in rng.sample(mentioned, rng.randint(1, 3)):
            edges[(paper(doi), target)] = rng.randint(0, 50)
    edges[(paper("10.5555/mirror.000"), mentioned[0])] = 10

    edges[(hidden[0], hidden[1])] = 1
    edges[(hidden[1], hidden[0])] = 1
    edges[(hidden[2], hidden[3])] = 1
    edges[(hidden[3], hidden[4])] = 1
    edges[(hidden[4], hidden[2])] = 1
    for i in range(5, 9):
        edges[(hidden[i], hidden[i + 1])] = 1

    if inject_cycle:
        edges[(mentioned[1], mentioned[0])] = 1

    graph = make_graph([(u, v, w) for (u, v), w in edges.items()], nodes=mentioned + hidden)
    return graph, 5 / 40


def is_cycle_witness(graph: DependencyGraph, witness: Optional[Sequence[NodeId]]) -> bool:
    if not witness or len(witness) < 3 or witness[0] != witness[-1]:
        return False
    return all(v in graph.successors(u) for u, v in zip(witness, witness[1:]))
