import textwrap
from pathlib import Path

import pytest

from tests.helpers import golden_graph

MENTIONS = """\
paper_doi,ecosystem,package_id,package_name
10.1/p,cran,A,A
"""

CITATIONS = """\
paper_doi,citation_count
10.1/p,3
"""

REGISTRY = """\
{"ecosystem": "cran", "package_id": "A", "name": "A", "latest_version": "1.0", "dependencies": ["B"]}
{"ecosystem": "cran", "package_id": "B", "name": "B", "latest_version": "2.1", "dependencies": []}
"""


@pytest.fixture
def golden():
    return golden_graph()


@pytest.fixture
def minimal_inputs(tmp_path) -> dict:
    """mentions.csv, citations.csv and registry.jsonl for paper -> A -> B."""
    paths = {}
    for name, text in (
        ("mentions", MENTIONS),
        ("citations", CITATIONS),
        ("registry", REGISTRY),
    ):
        suffix = "jsonl" if name == "registry" else "csv"
        path = tmp_path / f"{name}.{suffix}"
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        paths[name] = path
    return paths


@pytest.fixture
def write_file(tmp_path):
    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
