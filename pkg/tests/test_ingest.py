import io

import pytest

from src.core.errors import InputFormatError, SnapshotInconsistentError
from src.core.ingest import (
    CitationMap,
    Ecosystem,
    MentionRecord,
    PackageIndex,
    PackageRecord,
    RejectReport,
    fold_package_name,
    load_registry_snapshot,
    parse_citations,
    parse_mentions,
    write_citations,
    write_mentions,
    write_registry_snapshot,
)

MENTION_HEADER = "paper_doi,ecosystem,package_id,package_name\n"


def test_empty_mentions_file_with_header():
    rejects = RejectReport("mentions")
    assert parse_mentions(io.StringIO(MENTION_HEADER), rejects) == []
    assert rejects.reject_count == 0
    assert rejects.total == 0


def test_duplicate_mentions_collapse():
    text = MENTION_HEADER + "10.1/x,cran,ggplot2,ggplot2\n" * 2
    rejects = RejectReport("mentions")
    records = parse_mentions(io.StringIO(text), rejects)
    assert records == [MentionRecord("10.1/x", Ecosystem.CRAN, "ggplot2", "ggplot2")]
    assert rejects.duplicates == 1


def test_unsupported_ecosystem_is_rejected():
    rejects = RejectReport("mentions")
    records = parse_mentions(io.StringIO(MENTION_HEADER + "10.1/x,conda,numpy,numpy\n"), rejects)
    assert records == []
    assert rejects.reject_count == 1
    assert rejects.rows[0].reason == "unsupported ecosystem"
    assert rejects.rows[0].row_number == 2


def test_mentions_missing_header_column():
    with pytest.raises(InputFormatError, match="package_id"):
        parse_mentions(io.StringIO("paper_doi,ecosystem,package_name\n"))


def test_mentions_empty_stream_has_no_header():
    with pytest.raises(InputFormatError):
        parse_mentions(io.StringIO(""))


def test_mentions_header_with_bom_and_reordered_columns():
    text = "\ufeffpackage_name,package_id,ecosystem,paper_doi\nNumPy,numpy,PyPI,10.1/y\n"
    records = parse_mentions(io.StringIO(text))
    assert records == [MentionRecord("10.1/y", Ecosystem.PYPI, "numpy", "NumPy")]


def test_mentions_counters_add_up():
    text = MENTION_HEADER + (
        "10.1/a,cran,A,A\n"
        "10.1/a,cran,A,A\n"
        ",cran,B,B\n"
        "10.1/b,npm,left-pad,left-pad\n"
        "10.1/c,pypi,scipy\n"
        "\n"
        "10.1/d,bioconductor,limma,limma\n"
    )
    rejects = RejectReport("mentions")
    records = parse_mentions(io.StringIO(text), rejects)
    assert len(records) == 2
    assert rejects.accepted == 3
    assert rejects.reject_count == 3
    assert rejects.reject_count + rejects.accepted == rejects.total == 6


def test_citation_basic():
    citations = parse_citations(io.StringIO("paper_doi,citation_count\n10.1/x,5\n"))
    assert dict(citations) == {"10.1/x": 5}


def test_duplicate_citations_keep_maximum():
    text = "paper_doi,citation_count\n10.1/x,5\n10.1/x,7\n10.1/x,6\n"
    rejects = RejectReport("citations")
    citations = parse_citations(io.StringIO(text), rejects)
    assert citations["10.1/x"] == 7
    assert rejects.duplicates == 2


@pytest.mark.parametrize("count", ["-1", "2.5", "many"])
def test_invalid_citation_counts_are_rejected(count):
    rejects = RejectReport("citations")
    citations = parse_citations(
        io.StringIO(f"paper_doi,citation_count\n10.1/x,{count}\n"), rejects
    )
    assert len(citations) == 0
    assert rejects.reject_count == 1


def test_absent_doi_differs_from_zero():
    citations = CitationMap({"10.1/zero": 0})
    assert citations.get("10.1/zero") == 0
    assert citations.get("10.1/absent") is None
    assert "10.1/absent" not in citations


def test_citation_map_refuses_negative_counts():
    with pytest.raises(ValueError):
        CitationMap({"10.1/x": -3})


def _snapshot(*lines: str) -> io.StringIO:
    return io.StringIO("\n".join(lines) + "\n")


def test_snapshot_without_missing_metadata():
    index = load_registry_snapshot(
        _snapshot(
            '{"ecosystem": "cran", "package_id": "A", "name": "A", "latest_version": "1", "dependencies": ["B"]}',
            '{"ecosystem": "cran", "package_id": "B", "name": "B", "latest_version": "1", "dependencies": []}',
        )
    )
    assert len(index) == 2
    assert index.missing_metadata() == []
    assert index.lookup(Ecosystem.CRAN, "A").dependencies == ("B",)


def test_snapshot_reports_dangling_dependency():
    index = load_registry_snapshot(
        _snapshot(
            '{"ecosystem": "cran", "package_id": "A", "name": "A", "latest_version": "1", "dependencies": ["B"]}'
        )
    )
    assert len(index) == 1
    assert index.missing_metadata() == [(Ecosystem.CRAN, "B")]


def test_conflicting_snapshot_records_raise():
    with pytest.raises(SnapshotInconsistentError):
        load_registry_snapshot(
            _snapshot(
                '{"ecosystem": "pypi", "package_id": "a", "name": "a", "latest_version": "1", "dependencies": ["b"]}',
                '{"ecosystem": "pypi", "package_id": "a", "name": "a", "latest_version": "1", "dependencies": ["c"]}',
            )
        )


def test_snapshot_rejects_malformed_lines():
    rejects = RejectReport("registry")
    index = load_registry_snapshot(
        _snapshot(
            "not json",
            '{"ecosystem": "cran", "package_id": "A"}',
            '{"ecosystem": "cran", "package_id": "A", "name": "A", "latest_version": "1", "dependencies": []}',
            '{"ecosystem": "cran", "package_id": "A", "name": "A", "latest_version": "1", "dependencies": []}',
        ),
        rejects,
    )
    assert len(index) == 1
    assert rejects.reject_count == 2
    assert rejects.accepted == 2
    assert rejects.duplicates == 1


def test_pypi_names_fold_case_and_separators():
    assert fold_package_name(Ecosystem.PYPI, "Scikit_Learn") == "scikit-learn"
    assert fold_package_name(Ecosystem.PYPI, "zope.interface") == "zope-interface"
    assert fold_package_name(Ecosystem.CRAN, "DESeq2") == "DESeq2"
    assert fold_package_name(Ecosystem.BIOCONDUCTOR, "limma") == "limma"


def test_pypi_lookup_is_case_insensitive():
    index = PackageIndex([PackageRecord(Ecosystem.PYPI, "scikit-learn", "scikit-learn")])
    assert index.lookup(Ecosystem.PYPI, "Scikit_Learn") is not None
    index = PackageIndex([PackageRecord(Ecosystem.CRAN, "Matrix", "Matrix")])
    assert index.lookup(Ecosystem.CRAN, "matrix") is None


def test_package_record_drops_duplicate_dependencies():
    record = PackageRecord(Ecosystem.PYPI, "x", "x", dependencies=("NumPy", "numpy", "scipy"))
    assert record.dependencies == ("NumPy", "scipy")
    with pytest.raises(ValueError):
        PackageRecord(Ecosystem.CRAN, "x", "x", dependencies=("",))


def test_mentions_round_trip():
    records = [
        MentionRecord("10.1/a", Ecosystem.CRAN, "A", "A, the package"),
        MentionRecord("10.1/b", Ecosystem.PYPI, "numpy", "NumPy"),
    ]
    sink = io.StringIO()
    write_mentions(records, sink)
    assert parse_mentions(io.StringIO(sink.getvalue())) == records


def test_citations_round_trip():
    citations = CitationMap({"10.1/a": 0, "10.1/b": 12})
    sink = io.StringIO()
    write_citations(citations, sink)
    assert dict(parse_citations(io.StringIO(sink.getvalue()))) == dict(citations)


def test_snapshot_round_trip():
    index = PackageIndex(
        [
            PackageRecord(Ecosystem.CRAN, "A", "A", "1.0", ("B", "C")),
            PackageRecord(Ecosystem.PYPI, "numpy", "numpy", "2.0"),
        ]
    )
    sink = io.StringIO()
    write_registry_snapshot(index.records(), sink)
    assert load_registry_snapshot(io.StringIO(sink.getvalue())) == index
