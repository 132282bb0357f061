"""
Descriptive statistics over package nodes and the four-quadrant taxonomy.

Percentiles are pooled over every scored package node, across ecosystems.
Papers never enter a statistics population.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.centrality import CentralityResult
from src.core.errors import EmptyInputError, MetricsError
from src.core.graph import DependencyGraph, GraphVariant, NodeId
from src.core.ingest import Ecosystem, fold_package_name

logger = logging.getLogger(__name__)

HIGH_PERCENTILE = 0.5

MENTION_STATS_COLUMNS = (
    "ecosystem", "count", "dependency_only", "median", "iqr", "max", "gini", "dominance",
)
CENTRALITY_STATS_COLUMNS = (
    "ecosystem", "variant", "count", "median", "iqr", "max", "gini", "dominance",
)
PACKAGE_METRICS_COLUMNS = (
    "variant", "ecosystem", "node_key", "software", "mentions", "mention_pct",
    "centrality", "centrality_pct", "quadrant", "pasteur_score",
)
QUADRANT_COLUMNS = (
    "section", "rank", "software", "ecosystem", "mentions", "mention_pct",
    "centrality", "centrality_pct", "quadrant",
)


class Quadrant(str, Enum):
    PASTEUR = "pasteur"
    POPULAR = "popular"
    NEBRASKA = "nebraska"
    MAJORITY = "majority"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SummaryStats:
    count: int
    median: float
    iqr: float
    max: float
    gini: float

    @property
    def dominance(self) -> float:
        """How far the maximum sits above the bulk: max / (median + iqr/2)."""
        denominator = self.median + self.iqr / 2
        if denominator == 0:
            return math.inf if self.max > 0 else 0.0
        return self.max / denominator


@dataclass(frozen=True)
class PackageMetricsRow:
    node: NodeId
    name: str
    mentions: int
    mention_pct: float
    centrality: float
    centrality_pct: float
    quadrant: Quadrant

    @property
    def pasteur_score(self) -> float:
        return self.mention_pct + self.centrality_pct

    @property
    def ecosystem(self) -> Ecosystem:
        return self.node.ecosystem


@dataclass
class EcosystemSummary:
    ecosystem: Ecosystem
    package_count: int
    dependency_only_fraction: float
    mention_stats: SummaryStats
    centrality_stats: Dict[GraphVariant, SummaryStats] = field(default_factory=dict)


def _as_array(values: Iterable[float]) -> np.ndarray:
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise MetricsError("statistic of an empty list")
    if np.isnan(arr).any():
        raise MetricsError("values contain NaN")
    return arr


def gini(values: Iterable[float]) -> float:
    """
    Gini coefficient of non-negative values.

    Uses the sorted-rank form sum((2i - n - 1) * x_i) / (n * sum(x)) over
    ascending values, which equals the mean-absolute-difference definition.
    All-zero input gives 0.

    Raises:
        MetricsError: empty input or a negative value
    """
    arr = _as_array(values)
    if (arr < 0).any():
        raise MetricsError("gini is undefined for negative values")
    total = arr.sum()
    if total == 0:
        return 0.0
    arr = np.sort(arr)
    n = arr.size
    ranks = np.arange(1, n + 1)
    value = float(np.sum((2 * ranks - n - 1) * arr) / (n * total))
    return min(max(value, 0.0), 1.0)


def lorenz_curve(values: Iterable[float]) -> List[Tuple[float, float]]:
    """
    Points of the Lorenz curve: (share of packages, share of the total).

    Starts at (0, 0) and ends at (1, 1); an all-zero input yields the line of
    equality.
    """
    arr = _as_array(values)
    if (arr < 0).any():
        raise MetricsError("Lorenz curve is undefined for negative values")
    arr = np.sort(arr)
    n = arr.size
    total = arr.sum()
    population = np.arange(1, n + 1) / n
    if total == 0:
        shares = population
    else:
        shares = np.cumsum(arr) / total
    points = [(0.0, 0.0)]
    points += [(float(p), float(s)) for p, s in zip(population, shares)]
    points[-1] = (1.0, 1.0)
    return points


def percentile_ranks(values: Sequence[float]) -> List[float]:
    """
    Fraction of the other values strictly below each value: |{u < v}| / (n - 1).

    Ties share a rank, the unique minimum maps to 0 and the unique maximum to 1.

    Raises:
        MetricsError: fewer than two values
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise MetricsError(f"percentile ranks need at least 2 values, got {arr.size}")
    if np.isnan(arr).any():
        raise MetricsError("values contain NaN")
    below = np.searchsorted(np.sort(arr), arr, side="left")
    return (below / (arr.size - 1)).tolist()


def summarize(values: Iterable[float]) -> SummaryStats:
    """Count, median, IQR, max and Gini. Quartiles interpolate linearly."""
    arr = _as_array(values)
    q25, median, q75 = np.quantile(arr, [0.25, 0.5, 0.75])
    return SummaryStats(
        count=int(arr.size),
        median=float(median),
        iqr=float(q75 - q25),
        max=float(arr.max()),
        gini=gini(arr),
    )


def dependency_only_packages(graph: DependencyGraph, ecosystem: Ecosystem) -> List[str]:
    """Keys of packages no paper mentions, sorted."""
    return sorted(
        node.key for node in graph.packages(ecosystem) if graph.mention_count(node) == 0
    )


def summarize_ecosystem(
    graph: DependencyGraph,
    centrality_results: Mapping[GraphVariant, CentralityResult],
    ecosystem: Ecosystem,
) -> EcosystemSummary:
    """
    Mention and per-variant centrality statistics over one ecosystem's packages.

    Raises:
        EmptyInputError: the ecosystem has no package nodes
    """
    packages = graph.packages(ecosystem)
    if not packages:
        raise EmptyInputError(f"no {ecosystem} packages in the graph")

    mentions = [graph.mention_count(node) for node in packages]
    dependency_only = sum(1 for m in mentions if m == 0) / len(packages)

    centrality_stats = {}
    for variant, result in centrality_results.items():
        scores = result.package_scores(ecosystem)
        if not scores:
            logger.warning(f"{variant}: no scored {ecosystem} packages")
            continue
        centrality_stats[GraphVariant(variant)] = summarize(scores[n] for n in sorted(scores))

    return EcosystemSummary(
        ecosystem=ecosystem,
        package_count=len(packages),
        dependency_only_fraction=dependency_only,
        mention_stats=summarize(mentions),
        centrality_stats=centrality_stats,
    )


def classify_quadrant(mention_pct: float, centrality_pct: float) -> Quadrant:
    """High means a percentile of at least 0.5."""
    for label, value in (("mention", mention_pct), ("centrality", centrality_pct)):
        if not 0.0 <= value <= 1.0:
            raise MetricsError(f"{label} percentile {value} outside [0, 1]")

    high_mentions = mention_pct >= HIGH_PERCENTILE
    high_centrality = centrality_pct >= HIGH_PERCENTILE
    if high_mentions and high_centrality:
        return Quadrant.PASTEUR
    if high_mentions:
        return Quadrant.POPULAR
    if high_centrality:
        return Quadrant.NEBRASKA
    return Quadrant.MAJORITY


def build_metrics_rows(
    graph: DependencyGraph, result: CentralityResult
) -> List[PackageMetricsRow]:
    """
    One row per package scored in ``result``, sorted by node.

    Both percentiles are taken over the same population: the variant's scored
    package nodes.

    Raises:
        EmptyInputError: fewer than two packages were scored
    """
    scores = result.package_scores()
    nodes = sorted(scores)
    if len(nodes) < 2:
        raise EmptyInputError(
            f"{result.variant}: need at least two scored packages, got {len(nodes)}"
        )

    mentions = [graph.mention_count(node) for node in nodes]
    centrality = [scores[node] for node in nodes]
    mention_pct = percentile_ranks(mentions)
    centrality_pct = percentile_ranks(centrality)

    return [
        PackageMetricsRow(
            node=node,
            name=graph.name(node),
            mentions=m,
            mention_pct=mp,
            centrality=c,
            centrality_pct=cp,
            quadrant=classify_quadrant(mp, cp),
        )
        for node, m, mp, c, cp in zip(nodes, mentions, mention_pct, centrality, centrality_pct)
    ]


def _tie_break(row: PackageMetricsRow) -> Tuple[str, str]:
    return (row.node.key, row.node.node_class.value)


def top_k_reports(
    rows: Sequence[PackageMetricsRow],
    k: int,
    include: Iterable[str] = (),
) -> Dict[str, List[PackageMetricsRow]]:
    """
    Ranked sections for one variant.

    Args:
        rows: Metrics rows of a single variant
        k: Section length
        include: Display names to list in a ``sanity`` section (case and
            separator insensitive)

    Returns:
        Dict with ``pasteur``, ``popular``, ``nebraska`` and ``sanity`` lists
    """
    pasteur = sorted(rows, key=lambda r: (-r.pasteur_score, *_tie_break(r)))
    popular = sorted(
        (r for r in rows if r.centrality_pct < HIGH_PERCENTILE),
        key=lambda r: (-r.mention_pct, *_tie_break(r)),
    )
    nebraska = sorted(
        (r for r in rows if r.mention_pct < HIGH_PERCENTILE),
        key=lambda r: (-r.centrality_pct, *_tie_break(r)),
    )

    wanted = {fold_package_name(Ecosystem.PYPI, name) for name in include}
    sanity = sorted(
        (r for r in rows if fold_package_name(Ecosystem.PYPI, r.name) in wanted),
        key=_tie_break,
    )

    return {
        "pasteur": pasteur[:k],
        "popular": popular[:k],
        "nebraska": nebraska[:k],
        "sanity": sanity,
    }


# ---------------------------------------------------------------------------
# Tabular output
# ---------------------------------------------------------------------------


def mention_stats_frame(summaries: Sequence[EcosystemSummary]) -> pd.DataFrame:
    records = []
    for summary in sorted(summaries, key=lambda s: s.ecosystem.value):
        stats = summary.mention_stats
        records.append(
            {
                "ecosystem": summary.ecosystem.value,
                "count": summary.package_count,
                "dependency_only": summary.dependency_only_fraction,
                "median": stats.median,
                "iqr": stats.iqr,
                "max": stats.max,
                "gini": stats.gini,
                "dominance": stats.dominance,
            }
        )
    return pd.DataFrame.from_records(records, columns=MENTION_STATS_COLUMNS)


def centrality_stats_frame(summaries: Sequence[EcosystemSummary]) -> pd.DataFrame:
    records = []
    for summary in sorted(summaries, key=lambda s: s.ecosystem.value):
        for variant in sorted(summary.centrality_stats, key=lambda v: v.value):
            stats = summary.centrality_stats[variant]
            records.append(
                {
                    "ecosystem": summary.ecosystem.value,
                    "variant": variant.value,
                    "count": stats.count,
                    "median": stats.median,
                    "iqr": stats.iqr,
                    "max": stats.max,
                    "gini": stats.gini,
                    "dominance": stats.dominance,
                }
            )
    return pd.DataFrame.from_records(records, columns=CENTRALITY_STATS_COLUMNS)


def _row_record(row: PackageMetricsRow) -> Dict[str, object]:
    return {
        "software": row.name,
        "ecosystem": row.ecosystem.value,
        "mentions": row.mentions,
        "mention_pct": row.mention_pct,
        "centrality": row.centrality,
        "centrality_pct": row.centrality_pct,
        "quadrant": row.quadrant.value,
    }


def package_metrics_frame(
    rows_by_variant: Mapping[GraphVariant, Sequence[PackageMetricsRow]]
) -> pd.DataFrame:
    """Every package row of every variant, for scatter plots."""
    records = []
    for variant in sorted(rows_by_variant, key=lambda v: v.value):
        for row in rows_by_variant[variant]:
            record = _row_record(row)
            record.update(
                variant=variant.value,
                node_key=row.node.key,
                pasteur_score=row.pasteur_score,
            )
            records.append(record)
    return pd.DataFrame.from_records(records, columns=PACKAGE_METRICS_COLUMNS)


def quadrant_frame(reports: Mapping[str, Sequence[PackageMetricsRow]]) -> pd.DataFrame:
    records = []
    for section in ("pasteur", "popular", "nebraska", "sanity"):
        for rank, row in enumerate(reports.get(section, ()), start=1):
            record = _row_record(row)
            record.update(section=section, rank=rank)
            records.append(record)
    return pd.DataFrame.from_records(records, columns=QUADRANT_COLUMNS)


def lorenz_frame(graph: DependencyGraph, ecosystems: Optional[Iterable[Ecosystem]] = None) -> pd.DataFrame:
    """Lorenz curve of mention counts per ecosystem."""
    records = []
    for ecosystem in ecosystems or tuple(Ecosystem):
        packages = graph.packages(ecosystem)
        if not packages:
            continue
        curve = lorenz_curve(graph.mention_count(node) for node in packages)
        records += [
            {"ecosystem": ecosystem.value, "package_share": p, "mention_share": s}
            for p, s in curve
        ]
    return pd.DataFrame.from_records(
        records, columns=("ecosystem", "package_share", "mention_share")
    )
