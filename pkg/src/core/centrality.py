"""
Katz centrality over the paper/package network.

Raw scores solve

    x[v] = beta * sum over edges u->v of W[u][v] * (x[u] + b[u])

i.e. x = sum_{k>=1} beta^k (W^T)^k b, a weighted count of all directed paths
ending at v. A paper with citation weight c hands beta*c to each package it
mentions; a package hands its own score plus baseline to its dependencies.

Acyclic graphs are solved exactly in one pass over a topological order. Cyclic
graphs go through a fixed-point iteration that refuses to return a number when
the series diverges.
"""

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, TextIO, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from src.core.errors import ConfigError, CyclicGraphError, InputFormatError, NonConvergenceError
from src.core.graph import DependencyGraph, GraphVariant, NodeClass, NodeId, induced_subgraph
from src.core.ingest import Ecosystem
from src.core.structure import largest_connected_component

logger = logging.getLogger(__name__)

CENTRALITY_COLUMNS = (
    "node_class",
    "node_key",
    "variant",
    "raw_score",
    "normalized_score",
    "converged",
)
METHODS = ("auto", "exact", "iterative")

DIVERGENCE_NORM = 1e12
DIVERGENCE_STREAK = 50


@dataclass
class CentralityConfig:
    """
    Katz parameters.

    Args:
        beta: Attenuation per hop (1 is safe only on acyclic graphs)
        baseline: Per-node baseline overrides; nodes not listed use default_baseline
        default_baseline: Baseline for every other node
        variant: Which edge weighting to use
        tolerance: Max-abs change that stops the iteration
        max_iterations: Iteration cap for the cyclic path
        normalize: Scale scores to unit Euclidean norm
        method: 'auto' (exact when acyclic), 'exact' or 'iterative'
    """

    beta: float = 1.0
    baseline: Mapping[NodeId, float] = field(default_factory=dict)
    default_baseline: float = 1.0
    variant: GraphVariant = GraphVariant.WEIGHTED
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    normalize: bool = True
    method: str = "auto"

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.default_baseline < 0 or any(v < 0 for v in self.baseline.values()):
            raise ConfigError("baseline values must be non-negative")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        self.variant = GraphVariant(self.variant)

    def baseline_for(self, node: NodeId) -> float:
        return float(self.baseline.get(node, self.default_baseline))


@dataclass
class CentralityResult:
    """Scores of one variant; ``scores`` are normalized when ``normalized`` is set."""

    raw_scores: Dict[NodeId, float]
    scores: Dict[NodeId, float]
    variant: GraphVariant
    converged: bool
    iterations_used: int
    normalized: bool

    def package_scores(self, ecosystem: Optional[Ecosystem] = None) -> Dict[NodeId, float]:
        return {
            node: score
            for node, score in self.scores.items()
            if not node.is_paper and (ecosystem is None or node.ecosystem is ecosystem)
        }


def _finish(
    raw: Dict[NodeId, float],
    config: CentralityConfig,
    converged: bool,
    iterations: int,
) -> CentralityResult:
    ordered = sorted(raw)
    norm = float(np.linalg.norm([raw[n] for n in ordered])) if ordered else 0.0
    if config.normalize and norm > 0:
        scores = {n: raw[n] / norm for n in ordered}
        normalized = True
    else:
        scores = {n: raw[n] for n in ordered}
        normalized = False
    return CentralityResult(
        raw_scores={n: raw[n] for n in ordered},
        scores=scores,
        variant=config.variant,
        converged=converged,
        iterations_used=iterations,
        normalized=normalized,
    )


def _edge_weight(graph: DependencyGraph, u: NodeId, v: NodeId, unit: bool) -> float:
    return 1.0 if unit else graph.weight(u, v)


def katz_exact_dag(graph: DependencyGraph, config: CentralityConfig) -> CentralityResult:
    """
    Exact Katz scores by accumulation in topological order.

    Predecessors are summed in sorted order, so results are bit-stable.

    Raises:
        CyclicGraphError: the graph has a directed cycle; use katz_iterative
    """
    g = graph.nx_graph
    if not nx.is_directed_acyclic_graph(g):
        raise CyclicGraphError(
            "graph has dependency cycles; exact accumulation needs a DAG, "
            "use katz_iterative with beta below 1/rho(W)"
        )

    unit = config.variant is GraphVariant.UNWEIGHTED
    beta = config.beta
    x: Dict[NodeId, float] = {}
    for v in nx.lexicographical_topological_sort(g):
        total = 0.0
        for u in sorted(g.predecessors(v)):
            total += _edge_weight(graph, u, v, unit) * (x[u] + config.baseline_for(u))
        x[v] = beta * total

    return _finish(x, config, converged=True, iterations=1)


def _weight_matrix(
    graph: DependencyGraph, nodes: Sequence[NodeId], unit: bool
) -> sparse.csr_matrix:
    position = {node: i for i, node in enumerate(nodes)}
    rows, cols, data = [], [], []
    for edge in graph.edges():
        rows.append(position[edge.source])
        cols.append(position[edge.target])
        data.append(1.0 if unit else edge.weight)
    n = len(nodes)
    matrix = sparse.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.float64)
    matrix.eliminate_zeros()
    return matrix


@dataclass(frozen=True)
class SpectralBlock:
    """One non-trivial strongly connected block and its spectral radius bounds."""

    indices: np.ndarray
    lower: float
    upper: float


def spectral_radius_bounds(
    matrix: sparse.csr_matrix,
) -> Tuple[float, float, List[SpectralBlock]]:
    """
    Bounds on the spectral radius from the non-trivial strongly connected blocks.

    For a non-negative matrix the spectral radius lies between the smallest and
    largest row (and column) sums; the radius of W is the largest radius among
    its strong blocks. Returns (lower, upper, blocks) with the overall bounds
    first and every block carrying its own.
    """
    n_components, labels = connected_components(matrix, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=n_components)
    blocks = []
    for component in np.flatnonzero(sizes >= 2):
        idx = np.flatnonzero(labels == component)
        block = matrix[idx][:, idx]
        row_sums = np.asarray(block.sum(axis=1)).ravel()
        col_sums = np.asarray(block.sum(axis=0)).ravel()
        blocks.append(
            SpectralBlock(
                indices=idx,
                lower=float(max(row_sums.min(), col_sums.min())),
                upper=float(min(row_sums.max(), col_sums.max())),
            )
        )
    lower = max((b.lower for b in blocks), default=0.0)
    upper = max((b.upper for b in blocks), default=0.0)
    return lower, upper, blocks


def _fed_nodes(transposed: sparse.csr_matrix, baseline: np.ndarray) -> np.ndarray:
    """Mask of nodes with positive baseline or reachable from one along positive edges."""
    reached = baseline > 0
    frontier = reached.copy()
    while frontier.any():
        step = (transposed @ frontier.astype(np.float64)) > 0
        frontier = step & ~reached
        reached |= frontier
    return reached


def _divergence_message(beta: float, lower: float, upper: float, reason: str) -> str:
    limit = f"{1 / upper:.6g}" if upper > 0 else "inf"
    return (
        f"Katz iteration does not converge ({reason}) for beta={beta:g}: the cyclic "
        f"part of the graph has spectral radius {lower:.6g} <= rho(W) <= {upper:.6g}; "
        f"beta < {limit} guarantees convergence"
    )


def katz_iterative(graph: DependencyGraph, config: CentralityConfig) -> CentralityResult:
    """
    Fixed-point iteration x <- beta * W^T (x + b) from x = 0.

    With non-negative weights the iterates grow monotonically towards the fixed
    point. The iteration stops when the max-abs change drops below the
    tolerance.

    Raises:
        NonConvergenceError: beta is provably at or above 1/rho(W), the norm kept
            growing past 1e12 for 50 iterations, or max_iterations ran out
    """
    nodes = graph.nodes()
    if not nodes:
        return _finish({}, config, converged=True, iterations=0)

    unit = config.variant is GraphVariant.UNWEIGHTED
    matrix = _weight_matrix(graph, nodes, unit)
    transposed = matrix.T.tocsr()
    b = np.array([config.baseline_for(n) for n in nodes], dtype=np.float64)
    beta = config.beta

    lower, upper, blocks = spectral_radius_bounds(matrix)
    fed = _fed_nodes(transposed, b)
    for block in blocks:
        # a block nothing feeds stays at zero whatever its radius
        if beta * block.lower >= 1 and fed[block.indices].any():
            raise NonConvergenceError(
                _divergence_message(beta, block.lower, upper, "beta * rho(W) >= 1")
            )

    x = np.zeros(len(nodes))
    previous_norm = 0.0
    streak = 0
    for iteration in range(1, config.max_iterations + 1):
        updated = beta * (transposed @ (x + b))
        change = float(np.max(np.abs(updated - x)))
        norm = float(np.linalg.norm(updated))
        streak = streak + 1 if norm > previous_norm else 0
        x, previous_norm = updated, norm

        if change < config.tolerance:
            logger.debug(f"Katz iteration converged after {iteration} iterations")
            raw = {node: float(value) for node, value in zip(nodes, x)}
            return _finish(raw, config, converged=True, iterations=iteration)

        if streak >= DIVERGENCE_STREAK and norm > DIVERGENCE_NORM:
            raise NonConvergenceError(
                _divergence_message(beta, lower, upper, f"norm {norm:.3g} still growing")
            )

    raise NonConvergenceError(
        _divergence_message(
            beta, lower, upper, f"no convergence within {config.max_iterations} iterations"
        )
    )


def katz_centrality(graph: DependencyGraph, config: CentralityConfig) -> CentralityResult:
    """Route to the exact path for acyclic graphs, otherwise iterate."""
    if config.method == "exact":
        return katz_exact_dag(graph, config)
    if config.method == "iterative":
        return katz_iterative(graph, config)
    if graph.is_acyclic():
        return katz_exact_dag(graph, config)
    logger.info(f"graph is cyclic; iterating with beta={config.beta}")
    return katz_iterative(graph, config)


def _lcc_scores(graph: DependencyGraph, config: CentralityConfig) -> CentralityResult:
    raw: Dict[NodeId, float] = {}
    converged = True
    iterations = 0
    inner = replace(config, normalize=False)

    for ecosystem in Ecosystem:
        report = largest_connected_component(graph, ecosystem)
        if report.is_empty:
            continue
        component = induced_subgraph(graph, report.lcc_nodes.__contains__)
        result = katz_centrality(component, inner)
        for node, score in result.raw_scores.items():
            # papers sit in several ecosystem components and always score 0
            raw[node] = raw.get(node, 0.0) + score
        converged = converged and result.converged
        iterations = max(iterations, result.iterations_used)

    return _finish(raw, config, converged, iterations)


def run_variants(
    graph: DependencyGraph,
    base_config: CentralityConfig,
    variants: Iterable[GraphVariant] = tuple(GraphVariant),
) -> Dict[GraphVariant, CentralityResult]:
    """
    Katz scores for the unweighted, weighted and per-ecosystem-LCC variants.

    Each variant is normalized on its own. In the LCC variant nodes outside
    their ecosystem's largest component are absent from the score map.
    """
    results = {}
    for variant in variants:
        variant = GraphVariant(variant)
        config = replace(base_config, variant=variant)
        if variant is GraphVariant.WEIGHTED_LCC:
            results[variant] = _lcc_scores(graph, config)
        else:
            results[variant] = katz_centrality(graph, config)
        logger.info(
            f"{variant}: {len(results[variant].scores)} nodes scored, "
            f"{results[variant].iterations_used} iterations"
        )
    return results


def write_centrality_csv(result: CentralityResult, sink: TextIO) -> None:
    """``node_class,node_key,variant,raw_score,normalized_score,converged`` rows."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CENTRALITY_COLUMNS)
    for node in sorted(result.raw_scores):
        writer.writerow(
            [
                node.node_class.value,
                node.key,
                result.variant.value,
                repr(result.raw_scores[node]),
                repr(result.scores[node]) if result.normalized else "",
                "true" if result.converged else "false",
            ]
        )


def read_centrality_csv(source) -> CentralityResult:
    """Inverse of write_centrality_csv; ``iterations_used`` is not stored and reads as 0."""
    df = pd.read_csv(
        source,
        dtype={"node_class": str, "node_key": str, "variant": str,
               "normalized_score": str, "converged": str},
        keep_default_na=False,
        float_precision="round_trip",
    )
    missing = [c for c in CENTRALITY_COLUMNS if c not in df.columns]
    if missing:
        raise InputFormatError(f"centrality CSV is missing columns {missing}")

    variants = set(df["variant"])
    if len(variants) > 1:
        raise InputFormatError(f"centrality CSV mixes variants {sorted(variants)}")
    variant = GraphVariant(variants.pop()) if variants else GraphVariant.WEIGHTED

    nodes = [NodeId(NodeClass(c), k) for c, k in zip(df["node_class"], df["node_key"])]
    raw = dict(zip(nodes, df["raw_score"].astype(float)))
    normalized = bool(len(df)) and all(value != "" for value in df["normalized_score"])
    if normalized:
        scores = dict(zip(nodes, (float(v) for v in df["normalized_score"])))
    else:
        scores = dict(raw)

    return CentralityResult(
        raw_scores=raw,
        scores=scores,
        variant=variant,
        converged=all(value == "true" for value in df["converged"]),
        iterations_used=0,
        normalized=normalized,
    )
