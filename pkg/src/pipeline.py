"""
Dependency Network Pipeline - staged CLI

Pipeline Flow:
1. fetch      crawl the registry for mentioned packages (optional)
2. build      mentions + citations + registry snapshot -> graph.gexf
3. analyze    Katz centrality per variant -> centrality_<variant>.csv
4. stats      per-ecosystem mention and centrality statistics
5. quadrants  Pasteur / Popular / Nebraska rankings
6. cycles     dependency loops and the mention-component acyclicity verdict

Each stage reads the previous stage's artifacts from the output directory, so
a published GEXF can enter directly at `analyze` via --graph.

Usage:
    python -m src.pipeline run --mentions m.csv --citations c.csv --registry r.jsonl
    python -m src.pipeline analyze --graph published.gexf --out output/
"""

import argparse
import asyncio
import logging
import sys
import time
import traceback
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd
from dotenv import load_dotenv

from src.core.centrality import (
    CentralityResult,
    read_centrality_csv,
    run_variants,
    write_centrality_csv,
)
from src.core.errors import (
    ConfigError,
    DepGraphError,
    EmptyInputError,
    InputFormatError,
    RegistryUnavailableError,
)
from src.core.graph import BuildReport, DependencyGraph, GraphVariant, build_graph
from src.core.graph_io import read_gexf, write_edge_list, write_gexf
from src.core.ingest import (
    RejectReport,
    load_registry_snapshot,
    parse_citations,
    parse_mentions,
    write_registry_snapshot,
)
from src.core.metrics import (
    EcosystemSummary,
    PackageMetricsRow,
    build_metrics_rows,
    centrality_stats_frame,
    dependency_only_packages,
    lorenz_frame,
    mention_stats_frame,
    package_metrics_frame,
    quadrant_frame,
    summarize_ecosystem,
    top_k_reports,
)
from src.core.structure import (
    AcyclicityReport,
    SccReport,
    assert_mention_components_acyclic,
    largest_connected_component,
    strongly_connected_components,
)
from src.services.registry_client import RegistryClient
from src.services.registry_service import DependencyCrawler
from src.utils.config_loader import ConfigLoader, RunConfig
from src.utils.file_utils import open_input, save_frame, save_text, save_with

load_dotenv(Path(__file__).parent.parent / ".env")

logger = logging.getLogger(__name__)

GRAPH_FILE = "graph.gexf"
REGISTRY_FILE = "registry.jsonl"


def _banner(title: str) -> None:
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80)


class DependencyPipeline:
    """Staged pipeline over the paper/package network."""

    def __init__(self, config: RunConfig, loader: Optional[ConfigLoader] = None):
        """
        Initialize the pipeline.

        Args:
            config: Validated run configuration
            loader: Config loader for registry endpoints (default: src/config/)
        """
        self.config = config
        self.loader = loader or ConfigLoader()
        self.out = config.ensure_output_dir()

    def artifact(self, name: str) -> Path:
        return self.out / name

    # ========================================
    # Artifact readers
    # ========================================

    def load_graph(self) -> DependencyGraph:
        path = self.config.graph or self.artifact(GRAPH_FILE)
        if not Path(path).exists():
            raise InputFormatError(f"cannot read graph file {path}: not found")
        return read_gexf(path)

    def load_centrality(self) -> Dict[GraphVariant, CentralityResult]:
        results = {}
        for variant in self.config.variants:
            with open_input(self.artifact(f"centrality_{variant}.csv"), "centrality") as f:
                results[variant] = read_centrality_csv(f)
        return results

    # ========================================
    # Stages
    # ========================================

    def cmd_fetch(self) -> Path:
        """Crawl the registry from the mentioned packages and write registry.jsonl."""
        config = self.config
        if config.mentions is None:
            raise ConfigError("fetch needs --mentions")

        _banner("REGISTRY CRAWL")
        print(f"Registry: {config.api_url}")
        print(f"Cache: {config.cache_dir}")
        print(f"Concurrency: {config.concurrency}")

        print("\n[STEP 1] Reading mentions...")
        with open_input(config.mentions, "mentions") as f:
            mentions = [m for m in parse_mentions(f) if m.ecosystem in config.ecosystems]
        print(f"✓ {len(mentions)} mentions")

        print("[STEP 2] Crawling dependencies...")
        start = time.time()
        records, unknown, failed = asyncio.run(self._crawl(mentions))
        print(f"✓ Crawl complete in {time.time() - start:.1f}s")
        print(f"✓ {len(records)} packages, {len(unknown)} unknown to the registry")

        path = self.artifact(REGISTRY_FILE)
        save_with(lambda f: write_registry_snapshot(records, f), path)
        print(f"✓ Saved: {path}\n")

        if failed:
            for (ecosystem, name), reason in failed:
                print(f"✗ {ecosystem}/{name}: {reason}")
            names = ", ".join(f"{eco}/{name}" for (eco, name), _ in failed)
            raise RegistryUnavailableError(
                f"{len(failed)} packages could not be fetched ({names}); {path} omits "
                "them and their dependencies, rerun fetch to retry from the cache"
            )
        return path

    async def _crawl(self, mentions):
        endpoints = {
            eco: endpoint
            for eco, endpoint in self.loader.endpoints.items()
            if eco in self.config.ecosystems
        }
        async with RegistryClient(
            base_url=self.config.api_url,
            cache_dir=self.config.cache_dir,
            endpoints=endpoints,
            delay=self.config.delay,
            max_retries=self.config.max_retries,
            max_concurrent=self.config.concurrency,
        ) as client:
            crawler = DependencyCrawler(client, ecosystems=endpoints)
            records, unknown = await crawler.crawl_mentions(mentions)
            logger.info(
                f"requests={client.total_requests} cache_hits={client.cache_hits} "
                f"failures={client.failed_requests}"
            )
            return records, unknown, crawler.failed

    def cmd_build(self) -> DependencyGraph:
        """Build the network and write graph.gexf, edges.csv and build_report.txt."""
        config = self.config
        if config.mentions is None or config.citations is None:
            raise ConfigError("build needs --mentions and --citations")
        registry = config.registry or self.artifact(REGISTRY_FILE)

        _banner("BUILD DEPENDENCY NETWORK")
        print(f"Ecosystems: {', '.join(e.value for e in config.ecosystems)}")
        print("=" * 80 + "\n")

        print("[STEP 1] Reading inputs...")
        report = BuildReport()
        for source in ("mentions", "citations", "registry"):
            report.rejects.append(RejectReport(source))
        mention_rejects, citation_rejects, registry_rejects = report.rejects

        with open_input(config.mentions, "mentions") as f:
            mentions = parse_mentions(f, mention_rejects)
        with open_input(config.citations, "citations") as f:
            citations = parse_citations(f, citation_rejects)
        with open_input(registry, "registry") as f:
            index = load_registry_snapshot(f, registry_rejects)
        for rejects in report.rejects:
            print(f"✓ {rejects.summary()}")

        print("[STEP 2] Resolving dependencies...")
        graph = build_graph(mentions, citations, index, config.build_config(), report)
        counts = graph.class_counts()
        print(f"✓ Nodes: {', '.join(f'{k}={v}' for k, v in counts.items())}")
        print(f"✓ Edges: {graph.number_of_edges()}")
        print(f"✓ Dangling dependencies: {len(report.dangling_dependencies)}")

        print("[STEP 3] Saving artifacts...")
        for name, writer in (
            (GRAPH_FILE, lambda f: write_gexf(graph, f)),
            ("edges.csv", lambda f: write_edge_list(graph, f)),
        ):
            print(f"✓ Saved: {save_with(writer, self.artifact(name))}")
        print(f"✓ Saved: {save_text(report.render(graph), self.artifact('build_report.txt'))}\n")
        return graph

    def cmd_analyze(self) -> Dict[GraphVariant, CentralityResult]:
        """Katz centrality per variant plus the combined per-package metrics file."""
        config = self.config
        _banner("KATZ CENTRALITY")
        print(f"Beta: {config.beta}")
        print(f"Variants: {', '.join(v.value for v in config.variants)}")
        print("=" * 80 + "\n")

        print("[STEP 1] Loading graph...")
        graph = self.load_graph()
        print(f"✓ {graph.number_of_nodes()} nodes, {graph.number_of_edges()} edges")

        print("[STEP 2] Computing centrality...")
        start = time.time()
        results = run_variants(graph, config.centrality_config(), config.variants)
        print(f"✓ Centrality complete in {time.time() - start:.1f}s")

        print("[STEP 3] Saving results...")
        rows_by_variant = {}
        for variant, result in results.items():
            path = save_with(
                lambda f, r=result: write_centrality_csv(r, f),
                self.artifact(f"centrality_{variant}.csv"),
            )
            print(f"✓ {variant}: {len(result.scores)} nodes "
                  f"({'converged' if result.converged else 'not converged'}) -> {path}")
            rows_by_variant[variant] = build_metrics_rows(graph, result)

        path = save_frame(package_metrics_frame(rows_by_variant), self.artifact("package_metrics.csv"))
        print(f"✓ Saved: {path}\n")
        return results

    def cmd_stats(self) -> List[EcosystemSummary]:
        """Per-ecosystem mention and centrality statistics."""
        _banner("ECOSYSTEM STATISTICS")
        graph = self.load_graph()
        results = self.load_centrality()

        summaries = []
        for ecosystem in self.config.ecosystems:
            if not graph.packages(ecosystem):
                print(f"- {ecosystem}: no packages, skipped")
                continue
            summary = summarize_ecosystem(graph, results, ecosystem)
            summaries.append(summary)
            stats = summary.mention_stats
            print(
                f"✓ {ecosystem}: {summary.package_count} packages, "
                f"dependency-only {summary.dependency_only_fraction:.4f}, "
                f"median {stats.median:g}, IQR {stats.iqr:g}, max {stats.max:g}, "
                f"gini {stats.gini:.4f}"
            )
        if not summaries:
            raise EmptyInputError("none of the selected ecosystems has packages")

        dependency_only = [
            {"ecosystem": s.ecosystem.value, "node_key": key}
            for s in summaries
            for key in dependency_only_packages(graph, s.ecosystem)
        ]

        for name, frame in (
            ("mention_stats.csv", mention_stats_frame(summaries)),
            ("centrality_stats.csv", centrality_stats_frame(summaries)),
            ("lorenz_mentions.csv", lorenz_frame(graph, [s.ecosystem for s in summaries])),
            ("dependency_only.csv", pd.DataFrame(dependency_only, columns=["ecosystem", "node_key"])),
        ):
            print(f"✓ Saved: {save_frame(frame, self.artifact(name))}")
        print()
        return summaries

    def cmd_quadrants(self) -> Dict[GraphVariant, Dict[str, List[PackageMetricsRow]]]:
        """Top-k Pasteur / Popular / Nebraska tables per variant."""
        config = self.config
        _banner("QUADRANT RANKINGS")
        print(f"Top k: {config.top_k}")
        print(f"Sanity-check packages: {', '.join(config.include) or '-'}")
        print("=" * 80 + "\n")

        graph = self.load_graph()
        reports = {}
        for variant, result in self.load_centrality().items():
            rows = build_metrics_rows(graph, result)
            reports[variant] = top_k_reports(rows, config.top_k, config.include)
            path = save_frame(quadrant_frame(reports[variant]), self.artifact(f"quadrants_{variant}.csv"))
            nebraska = ", ".join(r.name for r in reports[variant]["nebraska"][:3]) or "-"
            print(f"✓ {variant}: top Nebraska {nebraska} -> {path}")
        print()
        return reports

    def cmd_cycles(self) -> Tuple[SccReport, AcyclicityReport]:
        """Dependency loops, per-ecosystem components and the acyclicity verdict."""
        _banner("DEPENDENCY LOOPS")
        graph = self.load_graph()
        scc = strongly_connected_components(graph)
        verdict = assert_mention_components_acyclic(graph)

        loop_rows = [
            {"component_id": i, "size": len(component),
             "package_keys": ";".join(str(node) for node in sorted(component))}
            for i, component in enumerate(scc.loops(), start=1)
        ]
        save_frame(
            pd.DataFrame(loop_rows, columns=["component_id", "size", "package_keys"]),
            self.artifact("cycles.csv"),
        )

        lines = [
            f"packages: {len(graph.packages())}",
            f"loop_packages: {len(scc.loop_packages)}",
            f"loops: {len(scc.loops())}",
        ]
        for ecosystem in self.config.ecosystems:
            fraction = scc.loop_fraction_for(graph.packages(ecosystem))
            lines.append(f"{ecosystem} loop_fraction={fraction!r}")
        for ecosystem in self.config.ecosystems:
            component = largest_connected_component(graph, ecosystem)
            if not component.is_empty:
                lines.append(
                    f"lcc_{ecosystem}: {component.component_sizes[0]} of "
                    f"{sum(component.component_sizes)} nodes"
                )
        lines.append(f"acyclic: {'true' if verdict.acyclic else 'false'}")
        if verdict.witness_cycle:
            lines.append("witness: " + " -> ".join(str(n) for n in verdict.witness_cycle))
        save_text("\n".join(lines) + "\n", self.artifact("cycles_summary.txt"))

        for line in lines:
            print(f"✓ {line}")
        print()
        return scc, verdict

    def run(self) -> None:
        """build -> analyze -> stats -> quadrants -> cycles."""
        start = time.time()
        self.cmd_build()
        self.cmd_analyze()
        self.cmd_stats()
        self.cmd_quadrants()
        self.cmd_cycles()
        _banner("PIPELINE COMPLETE")
        print(f"Total time: {time.time() - start:.1f}s")
        print(f"Output: {self.out}")
        print("=" * 80 + "\n")


COMMANDS = {
    "fetch": DependencyPipeline.cmd_fetch,
    "build": DependencyPipeline.cmd_build,
    "analyze": DependencyPipeline.cmd_analyze,
    "stats": DependencyPipeline.cmd_stats,
    "quadrants": DependencyPipeline.cmd_quadrants,
    "cycles": DependencyPipeline.cmd_cycles,
    "run": DependencyPipeline.run,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML file of settings")
    common.add_argument("--log-level", default="WARNING")
    common.add_argument("--mentions", type=Path)
    common.add_argument("--citations", type=Path)
    common.add_argument("--registry", type=Path, help="Registry snapshot (JSONL)")
    common.add_argument("--graph", type=Path, help="GEXF graph (default: <out>/graph.gexf)")
    common.add_argument("--out", type=Path)
    common.add_argument("--ecosystems", help="Comma list, e.g. cran,pypi")
    common.add_argument("--variants", help="Comma list of unweighted,weighted,weighted_lcc")
    common.add_argument("--beta", type=float)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--max-iterations", type=int)
    common.add_argument("--method", choices=["auto", "exact", "iterative"])
    common.add_argument("--top-k", type=int)
    common.add_argument("--include", help="Comma list of sanity-check package names")
    common.add_argument("--cache-dir", type=Path)
    common.add_argument("--api-url")
    common.add_argument("--concurrency", type=int)

    parser = argparse.ArgumentParser(
        description="Software mention and dependency network analysis"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=command.__doc__)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config", "log_level")
    }
    try:
        config = ConfigLoader().run_config(args.config, overrides)
        pipeline = DependencyPipeline(config)
        COMMANDS[args.command](pipeline)
    except DepGraphError as e:
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception:
        traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
