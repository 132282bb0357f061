"""Exception hierarchy shared by the analysis modules and the CLI."""


class DepGraphError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InputFormatError(DepGraphError):
    """An input file or payload does not follow its format."""

    exit_code = 2


class SnapshotInconsistentError(InputFormatError):
    """The registry snapshot holds conflicting records for one package."""


class GexfFormatError(InputFormatError):
    """A GEXF document is outside the supported subset."""


class ConfigError(DepGraphError):
    """Invalid run configuration."""

    exit_code = 2


class EmptyInputError(DepGraphError):
    """The input is empty or degenerate (no seed mentions, empty ecosystem)."""

    exit_code = 3


class CyclicGraphError(DepGraphError):
    """The exact Katz accumulation was asked to run on a cyclic graph."""

    exit_code = 4


class NonConvergenceError(DepGraphError):
    """Katz iteration diverged or ran out of iterations."""

    exit_code = 4


class MetricsError(DepGraphError, ValueError):
    """A statistic was requested on invalid input."""


class PackageUnknownError(DepGraphError):
    """The registry has no package under the requested name."""


class RegistryUnavailableError(DepGraphError):
    """The registry could not be reached after the configured retries."""


class RegistryPayloadError(InputFormatError):
    """A registry response could not be parsed."""


class GraphDataWarning(UserWarning):
    """Data-quality issue that does not stop processing."""
