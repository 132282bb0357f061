"""
GEXF and edge-list serialization for DependencyGraph.

The GEXF subset is the one the published network ships in: a directed
1.2-draft graph, a string node attribute ``type`` holding the node class and a
float ``weight`` on every edge.
"""

import csv
import io
import logging
import re
import warnings
from pathlib import Path
from typing import BinaryIO, Dict, TextIO, Union

import networkx as nx

from src.core.errors import GexfFormatError, GraphDataWarning, InputFormatError
from src.core.graph import DependencyGraph, NodeClass, NodeId

logger = logging.getLogger(__name__)

EDGE_LIST_COLUMNS = ("from_class", "from_key", "to_class", "to_key", "weight")

# attributes this module writes itself; anything else on a node is "extra"
_KNOWN_NODE_ATTRS = {"type", "key", "label", "name", "mention_count",
                     "metadata_missing", "citations_unknown"}
_LASTMODIFIED = re.compile(r'\s+lastmodifieddate="[^"]*"')


def _export_graph(graph: DependencyGraph) -> nx.DiGraph:
    export = nx.DiGraph()
    for node in graph.nodes():
        attrs = graph.attrs(node)
        data = {
            "label": graph.name(node),
            "type": node.node_class.value,
            "key": node.key,
            "mention_count": graph.mention_count(node),
            "metadata_missing": bool(attrs.get("metadata_missing", False)),
            "citations_unknown": bool(attrs.get("citations_unknown", False)),
        }
        for name, value in sorted((attrs.get("extra") or {}).items()):
            data.setdefault(name, value)
        export.add_node(str(node), **data)

    for edge in graph.edges():
        export.add_edge(str(edge.source), str(edge.target), weight=edge.weight)
    return export


def write_gexf(graph: DependencyGraph, sink: Union[str, Path, TextIO]) -> None:
    """
    Write a GEXF 1.2-draft document.

    Nodes are written in sorted order and the modification date is omitted,
    so identical graphs serialize to identical bytes.
    """
    body = "\n".join(nx.generate_gexf(_export_graph(graph), prettyprint=True))
    body = _LASTMODIFIED.sub("", body)
    document = "<?xml version='1.0' encoding='utf-8'?>\n" + body + "\n"

    if isinstance(sink, (str, Path)):
        Path(sink).write_text(document, encoding="utf-8")
    else:
        sink.write(document)


def _node_id(raw_id: str, data: Dict[str, object]) -> NodeId:
    node_type = data.get("type")
    if node_type is None:
        raise GexfFormatError(f"node {raw_id!r} has no 'type' attribute")
    try:
        node_class = NodeClass(str(node_type))
    except ValueError:
        raise GexfFormatError(
            f"node {raw_id!r} has unknown type {node_type!r}"
        ) from None

    key = data.get("key")
    if key is None:
        prefix = f"{node_class.value}:"
        key = raw_id[len(prefix):] if raw_id.startswith(prefix) else raw_id
    return NodeId(node_class, str(key))


def read_gexf(source: Union[str, Path, BinaryIO, TextIO]) -> DependencyGraph:
    """
    Read a GEXF document written by ``write_gexf`` or by other tools.

    Edges without a weight default to 1.0 (the GEXF default) with a warning.
    Unknown scalar node attributes are kept and written back out; anything
    else is dropped with a warning.
    """
    if isinstance(source, (str, Path)):
        handle = Path(source).open("rb")
    elif isinstance(source, io.TextIOBase):
        handle = io.BytesIO(source.read().encode("utf-8"))
    else:
        handle = source

    try:
        raw = nx.read_gexf(handle, node_type=None, relabel=False)
    except nx.NetworkXError as e:
        raise GexfFormatError(f"unsupported GEXF: {e}") from e
    except Exception as e:
        raise GexfFormatError(f"could not parse GEXF: {e}") from e
    finally:
        if isinstance(source, (str, Path)):
            handle.close()

    if not raw.is_directed():
        raise GexfFormatError("GEXF graph is undirected; a directed graph is required")
    if raw.is_multigraph():
        warnings.warn(
            "parallel edges in GEXF input collapsed to one edge",
            GraphDataWarning,
            stacklevel=2,
        )

    g = nx.DiGraph()
    ids: Dict[str, NodeId] = {}
    dropped = set()
    for raw_id, data in raw.nodes(data=True):
        node = _node_id(str(raw_id), data)
        if node in g:
            raise GexfFormatError(f"duplicate node {node}")
        ids[raw_id] = node

        extra = {}
        for name, value in data.items():
            if name in _KNOWN_NODE_ATTRS:
                continue
            if isinstance(value, (str, int, float, bool)):
                extra[name] = value
            else:
                dropped.add(name)

        g.add_node(
            node,
            name=str(data.get("label") or node.key),
            metadata_missing=bool(data.get("metadata_missing", False)),
            citations_unknown=bool(data.get("citations_unknown", False)),
            extra=extra,
        )

    if dropped:
        warnings.warn(
            f"GEXF node attributes ignored: {sorted(dropped)}",
            GraphDataWarning,
            stacklevel=2,
        )

    missing_weight = 0
    for u, v, data in raw.edges(data=True):
        weight = data.get("weight")
        if weight is None:
            missing_weight += 1
            weight = 1.0
        if not g.has_edge(ids[u], ids[v]):
            g.add_edge(ids[u], ids[v], weight=float(weight))

    if missing_weight:
        warnings.warn(
            f"{missing_weight} GEXF edges have no weight; using 1.0",
            GraphDataWarning,
            stacklevel=2,
        )

    try:
        return DependencyGraph(g)
    except InputFormatError as e:
        raise GexfFormatError(str(e)) from e


def write_edge_list(graph: DependencyGraph, sink: TextIO) -> None:
    """CSV ``from_class,from_key,to_class,to_key,weight`` sorted by endpoints."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(EDGE_LIST_COLUMNS)
    for edge in graph.edges():
        writer.writerow(
            [
                edge.source.node_class.value,
                edge.source.key,
                edge.target.node_class.value,
                edge.target.key,
                repr(edge.weight),
            ]
        )
