"""
Registry API client
Async HTTP client with a per-host politeness delay, bounded retries and an
on-disk response cache.

Payload accepted for a package (one GET per package):

    {"name": "...", "latest_release_number": "...",
     "dependencies": [{"package_name": "...", "kind": "...", "optional": false}]}
"""

import asyncio
import json
import logging
import os
import random
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Mapping, Optional, Tuple
from urllib.parse import quote, urlsplit

import aiohttp

from src.core.errors import (
    PackageUnknownError,
    RegistryPayloadError,
    RegistryUnavailableError,
)
from src.core.ingest import Ecosystem, PackageRecord, fold_package_name

logger = logging.getLogger(__name__)

NOT_FOUND_MARKER = {"__status__": 404}


@dataclass(frozen=True)
class EcosystemEndpoint:
    """Where an ecosystem lives on the registry API and which dependency kinds count."""

    registry: str
    required_kinds: FrozenSet[str] = field(default_factory=frozenset)

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "EcosystemEndpoint":
        return cls(
            registry=str(data["registry"]),
            required_kinds=frozenset(str(k).lower() for k in data.get("required_kinds", ())),
        )


class RateLimiter:
    """Minimum interval between consecutive requests to the same host."""

    def __init__(self, delay: float = 0.2):
        self.delay = delay
        self.last_request: Dict[str, float] = {}
        self.lock = asyncio.Lock()

    async def acquire(self, host: str = ""):
        """Wait until the host's politeness interval has passed."""
        while True:
            async with self.lock:
                now = time.monotonic()
                last = self.last_request.get(host)
                if last is None or now - last >= self.delay:
                    self.last_request[host] = now
                    return
                wait = self.delay - (now - last)

            await asyncio.sleep(wait)


class RegistryClient:
    """Async client for the package registry API with a local JSON cache."""

    def __init__(
        self,
        base_url: str,
        cache_dir: Path,
        endpoints: Mapping[Ecosystem, EcosystemEndpoint],
        delay: float = 0.2,
        max_retries: int = 3,
        max_concurrent: int = 4,
        timeout: float = 30.0,
        session: Optional[aiohttp.ClientSession] = None,
    ):
        if max_retries < 1:
            raise ValueError("max_retries must be >= 1")

        self.base_url = base_url.rstrip("/")
        self.cache_dir = Path(cache_dir)
        self.endpoints = dict(endpoints)
        self.rate_limiter = RateLimiter(delay)
        self.max_retries = max_retries
        self.timeout = timeout
        self.semaphore = asyncio.Semaphore(max_concurrent)
        self._session = session
        self._owns_session = session is None
        self._key_locks: Dict[Tuple[Ecosystem, str], asyncio.Lock] = {}

        # Statistics
        self.total_requests = 0
        self.cache_hits = 0
        self.failed_requests = 0

    async def __aenter__(self):
        if self._session is None:
            self._session = aiohttp.ClientSession()
        return self

    async def __aexit__(self, *args):
        if self._session and self._owns_session:
            await self._session.close()
            self._session = None

    def cache_path(self, ecosystem: Ecosystem, name: str) -> Path:
        folded = fold_package_name(ecosystem, name)
        return self.cache_dir / ecosystem.value / f"{quote(folded, safe='')}.json"

    def package_url(self, ecosystem: Ecosystem, name: str) -> str:
        endpoint = self._endpoint(ecosystem)
        return (
            f"{self.base_url}/registries/{quote(endpoint.registry, safe='')}"
            f"/packages/{quote(name, safe='')}"
        )

    def _endpoint(self, ecosystem: Ecosystem) -> EcosystemEndpoint:
        try:
            return self.endpoints[ecosystem]
        except KeyError:
            raise ValueError(f"no registry endpoint configured for {ecosystem}") from None

    def _key_lock(self, ecosystem: Ecosystem, name: str) -> asyncio.Lock:
        key = (ecosystem, fold_package_name(ecosystem, name))
        if key not in self._key_locks:
            self._key_locks[key] = asyncio.Lock()
        return self._key_locks[key]

    async def fetch_package_metadata(self, ecosystem: Ecosystem, name: str) -> PackageRecord:
        """
        Latest-release metadata for one package, from cache when present.

        Args:
            ecosystem: Registry the package lives in
            name: Package name as written in a mention or dependency list

        Returns:
            PackageRecord keeping only required dependency kinds

        Raises:
            PackageUnknownError: registry answered 404 (also cached)
            RegistryUnavailableError: network failure after all retries
            RegistryPayloadError: cached or fetched payload is malformed
        """
        path = self.cache_path(ecosystem, name)

        async with self._key_lock(ecosystem, name):
            if path.exists():
                self.cache_hits += 1
                logger.debug(f"cache hit {path}")
                payload = self._read_cache(path)
            else:
                body = await self._download(ecosystem, name)
                try:
                    payload = json.loads(body)
                except json.JSONDecodeError as e:
                    raise RegistryPayloadError(
                        f"{self.package_url(ecosystem, name)}: response is not JSON "
                        f"(cache {path} left unwritten): {e}"
                    ) from e
                _atomic_write(path, body)

        if payload == NOT_FOUND_MARKER:
            raise PackageUnknownError(f"{ecosystem}/{name}: package unknown to the registry")
        return self.parse_payload(ecosystem, payload, path)

    def _read_cache(self, path: Path) -> object:
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise RegistryPayloadError(f"unreadable cache entry {path}: {e}") from e

    async def _download(self, ecosystem: Ecosystem, name: str) -> str:
        """Response body as received; a 404 yields the serialized negative marker."""
        if self._session is None:
            raise RuntimeError("Client must be used as async context manager")

        url = self.package_url(ecosystem, name)
        host = urlsplit(url).netloc

        async with self.semaphore:
            # Retry logic with exponential backoff
            for attempt in range(self.max_retries):
                await self.rate_limiter.acquire(host)
                self.total_requests += 1
                try:
                    async with self._session.get(
                        url, timeout=aiohttp.ClientTimeout(total=self.timeout)
                    ) as response:
                        if response.status == 404:
                            logger.info(f"{ecosystem}/{name}: 404, caching negative result")
                            return json.dumps(NOT_FOUND_MARKER)
                        # Don't retry client errors (400-499 except 429)
                        if 400 <= response.status < 500 and response.status != 429:
                            raise RegistryUnavailableError(
                                f"{url}: client error {response.status}"
                            )
                        response.raise_for_status()
                        body = await response.text()

                except (aiohttp.ClientError, asyncio.TimeoutError) as e:
                    self.failed_requests += 1
                    if attempt < self.max_retries - 1:
                        base_wait = 2**attempt
                        jitter = random.uniform(0, 0.5 * base_wait)
                        wait_time = base_wait + jitter
                        logger.warning(
                            f"Retry {attempt + 1}/{self.max_retries} for {url} "
                            f"after {wait_time:.1f}s: {e}"
                        )
                        await asyncio.sleep(wait_time)
                        continue
                    raise RegistryUnavailableError(
                        f"{url}: failed after {self.max_retries} attempts: {e}"
                    ) from e

                return body

        raise RegistryUnavailableError(f"{url}: no attempts made")

    def parse_payload(self, ecosystem: Ecosystem, payload: object, path: Path) -> PackageRecord:
        """Turn a registry payload into a PackageRecord; ``path`` is quoted in errors."""
        if not isinstance(payload, dict) or not payload.get("name"):
            raise RegistryPayloadError(f"{path}: payload has no package name")

        required = self._endpoint(ecosystem).required_kinds
        dependencies = []
        raw_deps = payload.get("dependencies") or []
        if not isinstance(raw_deps, list):
            raise RegistryPayloadError(f"{path}: 'dependencies' is not a list")

        for dep in raw_deps:
            if not isinstance(dep, dict) or not str(dep.get("package_name") or "").strip():
                raise RegistryPayloadError(f"{path}: malformed dependency entry {dep!r}")
            if dep.get("optional"):
                continue
            kind = str(dep.get("kind") or "").lower()
            if required and kind not in required:
                continue
            dependencies.append(str(dep["package_name"]))

        name = str(payload["name"])
        return PackageRecord(
            ecosystem=ecosystem,
            package_id=name,
            name=name,
            latest_version=str(payload.get("latest_release_number") or ""),
            dependencies=tuple(dependencies),
        )


async def fetch_package_metadata(
    client: RegistryClient, ecosystem: Ecosystem, name: str
) -> PackageRecord:
    return await client.fetch_package_metadata(ecosystem, name)


def _atomic_write(path: Path, body: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(body)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
