"""
Input datasets: software mentions, paper citation counts and registry snapshots.

All three parsers are line-oriented and never abort on a bad row; problems are
collected into a RejectReport so the caller can show them in the build report.
"""

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Dict,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    TextIO,
    Tuple,
)

from src.core.errors import InputFormatError, SnapshotInconsistentError

logger = logging.getLogger(__name__)

MENTION_COLUMNS = ("paper_doi", "ecosystem", "package_id", "package_name")
CITATION_COLUMNS = ("paper_doi", "citation_count")
SNAPSHOT_FIELDS = ("ecosystem", "package_id", "name", "latest_version", "dependencies")

_PYPI_SEPARATORS = re.compile(r"[-_.]+")


class Ecosystem(str, Enum):
    """Package registries covered by the analysis."""

    BIOCONDUCTOR = "bioconductor"
    CRAN = "cran"
    PYPI = "pypi"

    @classmethod
    def parse(cls, value: str) -> "Ecosystem":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unsupported ecosystem: {value!r}") from None

    def __str__(self) -> str:
        return self.value


def fold_package_name(ecosystem: Ecosystem, name: str) -> str:
    """
    Normalize a package name for index lookups.

    PyPI treats names case-insensitively and considers runs of ``-``, ``_`` and
    ``.`` equivalent; CRAN and Bioconductor names are case-sensitive and are
    returned unchanged.
    """
    name = name.strip()
    if ecosystem is Ecosystem.PYPI:
        return _PYPI_SEPARATORS.sub("-", name).lower()
    return name


@dataclass(frozen=True)
class MentionRecord:
    """A package mentioned in the full text of one paper."""

    paper_doi: str
    ecosystem: Ecosystem
    package_id: str
    package_name: str

    @property
    def key(self) -> Tuple[str, Ecosystem, str]:
        return (self.paper_doi, self.ecosystem, self.package_id)


@dataclass(frozen=True)
class RejectedRow:
    row_number: int
    reason: str
    raw: str


@dataclass
class RejectReport:
    """Row-level parse problems for one input file."""

    source: str
    accepted: int = 0
    duplicates: int = 0
    rows: List[RejectedRow] = field(default_factory=list)

    def reject(self, row_number: int, reason: str, raw: str) -> None:
        self.rows.append(RejectedRow(row_number, reason, raw))

    @property
    def reject_count(self) -> int:
        return len(self.rows)

    @property
    def total(self) -> int:
        return self.accepted + self.reject_count

    def summary(self) -> str:
        return (
            f"{self.source}: {self.total} rows, {self.accepted} accepted "
            f"({self.duplicates} duplicates), {self.reject_count} rejected"
        )


class CitationMap(Mapping[str, int]):
    """Citation counts keyed by DOI; absent DOIs return None from ``get``."""

    def __init__(self, entries: Optional[Mapping[str, int]] = None):
        self._entries: Dict[str, int] = {}
        for doi, count in (entries or {}).items():
            self.record(doi, count)

    def record(self, doi: str, count: int) -> None:
        """Add an observation, keeping the largest count seen for a DOI."""
        if count < 0:
            raise ValueError(f"negative citation count for {doi}: {count}")
        previous = self._entries.get(doi)
        if previous is None or count > previous:
            self._entries[doi] = count

    def __getitem__(self, doi: str) -> int:
        return self._entries[doi]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"CitationMap({self._entries!r})"


@dataclass(frozen=True)
class PackageRecord:
    """Metadata of the latest release of one package."""

    ecosystem: Ecosystem
    package_id: str
    name: str
    latest_version: str = ""
    dependencies: Tuple[str, ...] = ()
    metadata_missing: bool = False

    def __post_init__(self):
        seen = set()
        unique = []
        for dep in self.dependencies:
            if not dep or not dep.strip():
                raise ValueError(f"empty dependency name in {self.name}")
            folded = fold_package_name(self.ecosystem, dep)
            if folded not in seen:
                seen.add(folded)
                unique.append(dep.strip())
        object.__setattr__(self, "dependencies", tuple(unique))

    @classmethod
    def stub(cls, ecosystem: Ecosystem, name: str, package_id: Optional[str] = None):
        """Placeholder for a package the snapshot has no metadata for."""
        return cls(
            ecosystem=ecosystem,
            package_id=package_id or fold_package_name(ecosystem, name),
            name=name,
            metadata_missing=True,
        )

    @property
    def folded_name(self) -> str:
        return fold_package_name(self.ecosystem, self.name)

    def to_json(self) -> Dict[str, object]:
        return {
            "ecosystem": self.ecosystem.value,
            "package_id": self.package_id,
            "name": self.name,
            "latest_version": self.latest_version,
            "dependencies": list(self.dependencies),
        }


class PackageIndex:
    """Registry records addressable by folded name and by package id."""

    def __init__(self, records: Iterable[PackageRecord] = ()):
        self.by_name: Dict[Tuple[Ecosystem, str], PackageRecord] = {}
        self.by_id: Dict[Tuple[Ecosystem, str], PackageRecord] = {}
        for record in records:
            self.add(record)

    def add(self, record: PackageRecord) -> None:
        name_key = (record.ecosystem, record.folded_name)
        id_key = (record.ecosystem, record.package_id)

        for index, key in ((self.by_name, name_key), (self.by_id, id_key)):
            existing = index.get(key)
            if existing is not None and existing != record:
                raise SnapshotInconsistentError(
                    f"conflicting records for {record.ecosystem}/{key[1]}: "
                    f"{existing.to_json()} vs {record.to_json()}"
                )

        self.by_name[name_key] = record
        self.by_id[id_key] = record

    def lookup(self, ecosystem: Ecosystem, name: str) -> Optional[PackageRecord]:
        return self.by_name.get((ecosystem, fold_package_name(ecosystem, name)))

    def get(self, ecosystem: Ecosystem, package_id: str) -> Optional[PackageRecord]:
        return self.by_id.get((ecosystem, package_id))

    def records(self) -> List[PackageRecord]:
        return sorted(
            self.by_id.values(), key=lambda r: (r.ecosystem.value, r.folded_name)
        )

    def missing_metadata(self) -> List[Tuple[Ecosystem, str]]:
        """Dependency names that have no record of their own, sorted."""
        missing = set()
        for record in self.by_id.values():
            for dep in record.dependencies:
                if self.lookup(record.ecosystem, dep) is None:
                    missing.add((record.ecosystem, fold_package_name(record.ecosystem, dep)))
        return sorted(missing, key=lambda item: (item[0].value, item[1]))

    def __len__(self) -> int:
        return len(self.by_id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PackageIndex):
            return NotImplemented
        return set(self.by_id.values()) == set(other.by_id.values())

    def __repr__(self) -> str:
        return f"PackageIndex(n_records={len(self)})"


def _read_header(reader: Iterator[List[str]], expected: Sequence[str], source: str):
    try:
        header = next(reader)
    except StopIteration:
        raise InputFormatError(f"{source}: missing header {','.join(expected)}")

    header = [column.strip().lstrip("\ufeff") for column in header]
    missing = [column for column in expected if column not in header]
    if missing:
        raise InputFormatError(
            f"{source}: missing header columns {missing} (got {header})"
        )
    return [header.index(column) for column in expected], len(header)


def _data_rows(reader) -> Iterator[Tuple[int, List[str]]]:
    # line 1 is the header
    for row_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        yield row_number, row


def parse_mentions(
    stream: TextIO, rejects: Optional[RejectReport] = None
) -> List[MentionRecord]:
    """
    Parse ``paper_doi,ecosystem,package_id,package_name`` CSV rows.

    Args:
        stream: Text stream positioned at the header line
        rejects: Collector for row-level problems (created when omitted)

    Returns:
        Mention records in input order, deduplicated on (paper, ecosystem, package_id)
    """
    rejects = rejects if rejects is not None else RejectReport("mentions")
    reader = csv.reader(stream)
    positions, width = _read_header(reader, MENTION_COLUMNS, rejects.source)

    records: List[MentionRecord] = []
    seen = set()
    for row_number, row in _data_rows(reader):
        raw = ",".join(row)
        if len(row) != width:
            rejects.reject(row_number, f"expected {width} fields, got {len(row)}", raw)
            continue

        doi, ecosystem, package_id, package_name = (row[i].strip() for i in positions)
        if not doi:
            rejects.reject(row_number, "empty paper_doi", raw)
            continue
        if not package_id:
            rejects.reject(row_number, "empty package_id", raw)
            continue
        try:
            parsed_ecosystem = Ecosystem.parse(ecosystem)
        except ValueError:
            rejects.reject(row_number, "unsupported ecosystem", raw)
            continue

        record = MentionRecord(doi, parsed_ecosystem, package_id, package_name)
        rejects.accepted += 1
        if record.key in seen:
            rejects.duplicates += 1
            continue
        seen.add(record.key)
        records.append(record)

    if rejects.reject_count:
        logger.warning(rejects.summary())
    return records


def parse_citations(
    stream: TextIO, rejects: Optional[RejectReport] = None
) -> CitationMap:
    """Parse ``paper_doi,citation_count`` CSV rows; duplicate DOIs keep the maximum."""
    rejects = rejects if rejects is not None else RejectReport("citations")
    reader = csv.reader(stream)
    positions, width = _read_header(reader, CITATION_COLUMNS, rejects.source)

    citations = CitationMap()
    for row_number, row in _data_rows(reader):
        raw = ",".join(row)
        if len(row) != width:
            rejects.reject(row_number, f"expected {width} fields, got {len(row)}", raw)
            continue

        doi, count_text = (row[i].strip() for i in positions)
        if not doi:
            rejects.reject(row_number, "empty paper_doi", raw)
            continue
        try:
            count = int(count_text)
        except ValueError:
            rejects.reject(row_number, f"non-integer citation count {count_text!r}", raw)
            continue
        if count < 0:
            rejects.reject(row_number, f"negative citation count {count}", raw)
            continue

        rejects.accepted += 1
        if doi in citations:
            rejects.duplicates += 1
        citations.record(doi, count)

    if rejects.reject_count:
        logger.warning(rejects.summary())
    return citations


def _record_from_json(data: object) -> PackageRecord:
    if not isinstance(data, dict):
        raise ValueError("record is not a JSON object")
    missing = [name for name in SNAPSHOT_FIELDS if name not in data]
    if missing:
        raise ValueError(f"missing fields {missing}")

    dependencies = data["dependencies"]
    if not isinstance(dependencies, list) or not all(
        isinstance(dep, str) for dep in dependencies
    ):
        raise ValueError("dependencies must be a list of strings")
    if not str(data["package_id"]).strip() or not str(data["name"]).strip():
        raise ValueError("empty package_id or name")

    return PackageRecord(
        ecosystem=Ecosystem.parse(str(data["ecosystem"])),
        package_id=str(data["package_id"]).strip(),
        name=str(data["name"]).strip(),
        latest_version=str(data["latest_version"] or ""),
        dependencies=tuple(dependencies),
    )


def load_registry_snapshot(
    stream: TextIO, rejects: Optional[RejectReport] = None
) -> PackageIndex:
    """
    Load a JSONL registry snapshot into a PackageIndex.

    Dangling dependency names are kept as names and reported through
    ``PackageIndex.missing_metadata()``. Two different records for the same
    package make the snapshot inconsistent and raise.
    """
    rejects = rejects if rejects is not None else RejectReport("registry")
    index = PackageIndex()

    for row_number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = _record_from_json(json.loads(line))
        except (json.JSONDecodeError, ValueError) as e:
            rejects.reject(row_number, str(e), line.rstrip("\n"))
            continue

        if index.get(record.ecosystem, record.package_id) == record:
            rejects.duplicates += 1
        index.add(record)
        rejects.accepted += 1

    missing = index.missing_metadata()
    if missing:
        logger.info(f"{len(missing)} dependencies have no registry metadata")
    if rejects.reject_count:
        logger.warning(rejects.summary())
    return index


def write_mentions(records: Iterable[MentionRecord], sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(MENTION_COLUMNS)
    for record in records:
        writer.writerow(
            [record.paper_doi, record.ecosystem.value, record.package_id, record.package_name]
        )


def write_citations(citations: Mapping[str, int], sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CITATION_COLUMNS)
    for doi in sorted(citations):
        writer.writerow([doi, citations[doi]])


def write_registry_snapshot(records: Iterable[PackageRecord], sink: TextIO) -> None:
    ordered = sorted(records, key=lambda r: (r.ecosystem.value, r.folded_name))
    for record in ordered:
        sink.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
