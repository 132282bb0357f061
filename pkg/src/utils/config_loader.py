"""Configuration loader for YAML config files."""

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from src.core.centrality import METHODS, CentralityConfig
from src.core.errors import ConfigError
from src.core.graph import BuildConfig, GraphVariant
from src.core.ingest import Ecosystem
from src.services.registry_client import EcosystemEndpoint

CACHE_DIR_ENV = "DEPGRAPH_CACHE_DIR"
REGISTRY_URL_ENV = "DEPGRAPH_REGISTRY_URL"


def _split(value) -> Tuple[str, ...]:
    """Accept a YAML list or a comma-separated string."""
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(item.strip() for item in value.split(",") if item.strip())
    return tuple(str(item).strip() for item in value)


def _optional_path(value) -> Optional[Path]:
    return Path(value) if value not in (None, "") else None


@dataclass
class RunConfig:
    """Everything one CLI invocation needs. Validated on construction."""

    mentions: Optional[Path] = None
    citations: Optional[Path] = None
    registry: Optional[Path] = None
    graph: Optional[Path] = None
    out: Path = Path("output")
    ecosystems: Tuple[Ecosystem, ...] = tuple(Ecosystem)
    variants: Tuple[GraphVariant, ...] = tuple(GraphVariant)
    beta: float = 1.0
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    method: str = "auto"
    top_k: int = 12
    include: Tuple[str, ...] = ()
    cache_dir: Path = Path("cache")
    api_url: str = ""
    concurrency: int = 4
    max_retries: int = 3
    delay: float = 0.2

    def __post_init__(self):
        for name in ("mentions", "citations", "registry", "graph"):
            setattr(self, name, _optional_path(getattr(self, name)))
        self.out = Path(self.out)
        self.cache_dir = Path(self.cache_dir)

        try:
            self.ecosystems = tuple(Ecosystem.parse(e) for e in _split(self.ecosystems))
        except ValueError as e:
            raise ConfigError(str(e)) from None
        try:
            self.variants = tuple(GraphVariant(v.lower()) for v in _split(self.variants))
        except ValueError as e:
            raise ConfigError(f"unknown variant: {e}") from None
        self.include = _split(self.include)

        try:
            self.beta = float(self.beta)
            self.tolerance = float(self.tolerance)
            self.delay = float(self.delay)
            self.max_iterations = int(self.max_iterations)
            self.top_k = int(self.top_k)
            self.concurrency = int(self.concurrency)
            self.max_retries = int(self.max_retries)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid numeric setting: {e}") from None

        if not self.ecosystems:
            raise ConfigError("at least one ecosystem must be selected")
        if not self.variants:
            raise ConfigError("at least one variant must be selected")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.concurrency < 1 or self.max_retries < 1:
            raise ConfigError("concurrency and max_retries must be >= 1")
        if self.delay < 0:
            raise ConfigError("delay must be >= 0")

    def centrality_config(self) -> CentralityConfig:
        return CentralityConfig(
            beta=self.beta,
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
            method=self.method,
        )

    def build_config(self) -> BuildConfig:
        return BuildConfig(ecosystems=self.ecosystems)

    def ensure_output_dir(self) -> Path:
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output directory {self.out} is not writable: {e}") from e
        if not os.access(self.out, os.W_OK):
            raise ConfigError(f"output directory {self.out} is not writable")
        return self.out


RUN_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


class ConfigLoader:
    """Load and manage configuration files."""

    def __init__(self, config_base_path: Optional[Path] = None):
        """
        Initialize the config loader.

        Args:
            config_base_path: Base path for config files. Defaults to src/config/
        """
        if config_base_path is None:
            # Default to src/config relative to this file
            self.config_base_path = Path(__file__).parent.parent / "config"
        else:
            self.config_base_path = Path(config_base_path)

    def load_yaml(self, filepath: Path) -> Dict[str, Any]:
        """Load a single YAML file."""
        try:
            with open(filepath, "r", encoding="utf-8") as f:
                return yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config file {filepath}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {filepath}: {e}") from e

    @property
    def run_defaults(self) -> Dict[str, Any]:
        return dict(self.load_yaml(self.config_base_path / "defaults.yaml")["run_defaults"])

    @property
    def registry(self) -> Dict[str, Any]:
        return self.load_yaml(self.config_base_path / "ecosystems.yaml")["registry"]

    @property
    def endpoints(self) -> Dict[Ecosystem, EcosystemEndpoint]:
        return {
            Ecosystem.parse(name): EcosystemEndpoint.from_dict(data)
            for name, data in self.registry["ecosystems"].items()
        }

    def run_config(
        self,
        user_config: Optional[Path] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> RunConfig:
        """
        Layer defaults.yaml, an optional user file, environment and flags.

        Args:
            user_config: YAML file of ``key: value`` pairs named like the flags
            overrides: Flag values; ``None`` entries mean "not given"

        Returns:
            Validated RunConfig
        """
        settings = self.run_defaults
        settings["api_url"] = self.registry["api_url"]

        if user_config is not None:
            user = self.load_yaml(Path(user_config))
            if not isinstance(user, dict):
                raise ConfigError(f"{user_config}: expected a mapping of settings")
            unknown = sorted(set(user) - RUN_CONFIG_KEYS)
            if unknown:
                raise ConfigError(f"{user_config}: unknown settings {unknown}")
            settings.update(user)

        if os.getenv(CACHE_DIR_ENV):
            settings["cache_dir"] = os.environ[CACHE_DIR_ENV]
        if os.getenv(REGISTRY_URL_ENV):
            settings["api_url"] = os.environ[REGISTRY_URL_ENV]

        for key, value in (overrides or {}).items():
            if value is not None and key in RUN_CONFIG_KEYS:
                settings[key] = value

        unknown = sorted(set(settings) - RUN_CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown settings {unknown}")
        return RunConfig(**settings)
