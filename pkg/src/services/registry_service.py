"""
Registry crawl
Breadth-first retrieval of the transitive dependency closure of mentioned packages.
"""

import asyncio
import logging
from typing import Iterable, List, Set, Tuple

from src.core.errors import DepGraphError, PackageUnknownError
from src.core.ingest import Ecosystem, MentionRecord, PackageRecord, fold_package_name
from src.services.registry_client import RegistryClient

logger = logging.getLogger(__name__)

PackageKey = Tuple[Ecosystem, str]


class DependencyCrawler:
    """Crawls registry metadata level by level, fetching each level concurrently."""

    def __init__(self, client: RegistryClient, ecosystems: Iterable[Ecosystem] = tuple(Ecosystem)):
        """
        Initialize the crawler.

        Args:
            client: Open RegistryClient; its semaphore bounds concurrency
            ecosystems: Ecosystems to crawl; seeds elsewhere are ignored
        """
        self.client = client
        self.ecosystems = set(ecosystems)
        # (package, error text) for fetches that failed in the last crawl
        self.failed: List[Tuple[PackageKey, str]] = []

    async def _fetch(self, ecosystem: Ecosystem, name: str):
        try:
            return await self.client.fetch_package_metadata(ecosystem, name)
        except PackageUnknownError as e:
            logger.info(str(e))
            return None

    async def crawl(
        self, seeds: Iterable[PackageKey]
    ) -> Tuple[List[PackageRecord], List[PackageKey]]:
        """
        Fetch the seeds and everything they require, transitively.

        Args:
            seeds: (ecosystem, package name) pairs

        Returns:
            Tuple of (records sorted by ecosystem and name, unknown packages).
            Packages whose fetch failed are left out and listed in ``self.failed``.
        """
        self.failed = []
        seen: Set[PackageKey] = set()
        level: List[PackageKey] = []
        for ecosystem, name in seeds:
            key = (ecosystem, fold_package_name(ecosystem, name))
            if ecosystem in self.ecosystems and key not in seen:
                seen.add(key)
                level.append((ecosystem, name))

        records = {}
        unknown: List[PackageKey] = []
        depth = 0
        while level:
            level.sort(key=lambda item: (item[0].value, item[1]))
            logger.info(f"crawl level {depth}: {len(level)} packages")
            fetched = await asyncio.gather(
                *(self._fetch(eco, name) for eco, name in level), return_exceptions=True
            )

            next_level: List[PackageKey] = []
            for (ecosystem, name), record in zip(level, fetched):
                if isinstance(record, DepGraphError):
                    logger.warning(f"{ecosystem}/{name}: fetch failed: {record}")
                    self.failed.append(((ecosystem, name), str(record)))
                    continue
                if isinstance(record, BaseException):
                    raise record
                if record is None:
                    unknown.append((ecosystem, name))
                    continue
                records[(ecosystem, record.folded_name)] = record
                for dep in record.dependencies:
                    key = (ecosystem, fold_package_name(ecosystem, dep))
                    if key not in seen:
                        seen.add(key)
                        next_level.append((ecosystem, dep))

            level = next_level
            depth += 1

        ordered = [records[key] for key in sorted(records, key=lambda k: (k[0].value, k[1]))]
        unknown.sort(key=lambda item: (item[0].value, item[1]))
        return ordered, unknown

    async def crawl_mentions(
        self, mentions: Iterable[MentionRecord]
    ) -> Tuple[List[PackageRecord], List[PackageKey]]:
        """Crawl starting from every mentioned package."""
        seeds = [(m.ecosystem, m.package_name or m.package_id) for m in mentions]
        return await self.crawl(seeds)
