"""JSON and metaprogram text codecs, plus format dispatch.

Both codecs share the graph's global id space. The metaprogram format is read
with a small statement grammar; it is never executed.
"""

from __future__ import annotations

import enum
import json
import re

from .errors import LadderError, ParseError, SchemaError, WiringError
from .graph import (
    ELEMENT_TYPES,
    PARAM_KEY_RE,
    RESERVED_KEYS,
    LDEdge,
    LDGraph,
    LDNode,
    check_valid,
    normalize_ids,
)


class FormatKind(str, enum.Enum):
    XML = "xml"
    JSON = "json"
    METAPROGRAM = "metaprogram"

    @classmethod
    def parse(cls, value) -> "FormatKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown format {value!r}; expected one of {names}") from None


# -- JSON ---------------------------------------------------------------------


def to_json_text(graph: LDGraph) -> str:
    check_valid(graph)
    root = {}
    for i, comp in enumerate(graph.components()):
        nodes = {}
        for nid in comp:
            node = graph.node(nid)
            attrs = {"ElementType": node.element_type, "Name": node.name}
            attrs.update(node.params)
            edges = [
                {"target": str(e.dst), "type": e.edge_type}
                for e in sorted(graph.out_edges(nid), key=lambda e: (e.dst, e.edge_type))
            ]
            nodes[str(nid)] = {"attributes": attrs, "edges": edges}
        root[f"G{i}"] = nodes
    return json.dumps(root, ensure_ascii=False, separators=(",", ":"))


def _node_id(raw, where) -> int:
    if isinstance(raw, bool) or not isinstance(raw, (str, int)):
        raise SchemaError(f"{where}: node id must be a decimal string, got {raw!r}")
    text = str(raw)
    if not re.fullmatch(r"[0-9]+", text):
        raise SchemaError(f"{where}: node id must be a decimal string, got {raw!r}")
    return int(text)


def parse_json_text(text: str) -> LDGraph:
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(root, dict):
        raise SchemaError("JSON root must be an object of graphs")
    nodes: dict[int, LDNode] = {}
    edges = []
    for label, graph_obj in root.items():
        if not isinstance(graph_obj, dict):
            raise SchemaError(f"graph {label!r} must be an object of nodes")
        for raw_id, body in graph_obj.items():
            nid = _node_id(raw_id, f"graph {label!r}")
            if nid in nodes:
                raise SchemaError(f"node id {nid} appears more than once")
            if not isinstance(body, dict) or not isinstance(body.get("attributes"), dict):
                raise SchemaError(f"node {nid}: expected an object with 'attributes'")
            attrs = dict(body["attributes"])
            etype = attrs.pop("ElementType", None)
            if etype not in ELEMENT_TYPES:
                raise SchemaError(f"node {nid}: unknown ElementType {etype!r}")
            name = attrs.pop("Name", "")
            for key, value in attrs.items():
                if not PARAM_KEY_RE.match(key) or not isinstance(value, (str, int, float)) or isinstance(value, bool):
                    raise SchemaError(f"node {nid}: invalid attribute {key!r}={value!r}")
            if not isinstance(name, str):
                raise SchemaError(f"node {nid}: Name must be a string")
            nodes[nid] = LDNode(nid, etype, name, {k: str(v) for k, v in attrs.items()})
            out = body.get("edges", [])
            if not isinstance(out, list):
                raise SchemaError(f"node {nid}: 'edges' must be an array")
            for edge in out:
                if not isinstance(edge, dict) or "target" not in edge:
                    raise SchemaError(f"node {nid}: every edge needs a 'target'")
                etype_edge = edge.get("type", "Flow")
                if not isinstance(etype_edge, str):
                    raise SchemaError(f"node {nid}: edge type must be a string")
                edges.append(LDEdge(nid, _node_id(edge["target"], f"node {nid} edge"), etype_edge))
    for e in edges:
        if e.dst not in nodes:
            raise WiringError(f"edge {e.src}->{e.dst} targets a node that is not defined")
    graph, _ = normalize_ids(nodes.values(), edges)
    return check_valid(graph)


# -- metaprogram --------------------------------------------------------------

_QSTRING = r'"(?:[^"\\]|\\.)*"'
_NODE_RE = re.compile(
    r"G\.add_node\((?P<id>[0-9]+)(?P<kv>(?:, *[A-Za-z_][A-Za-z0-9_]*=" + _QSTRING + r")*)\)\Z"
)
_KV_RE = re.compile(r", *(?P<key>[A-Za-z_][A-Za-z0-9_]*)=(?P<val>" + _QSTRING + ")")
_EDGE_RE = re.compile(r"G\.add_edge\((?P<src>[0-9]+), *(?P<dst>[0-9]+), *type=(?P<type>" + _QSTRING + r")\)\Z")
_PRELUDE = ("import networkx as nx", "G = nx.DiGraph()")


def _quote(value: str) -> str:
    if "\n" in value:
        raise SchemaError(f"metaprogram values cannot contain a line feed: {value!r}")
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _unquote(token: str, lineno: int) -> str:
    body = token[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in ('"', "\\"):
                raise ParseError(f"unsupported escape \\{nxt}", lineno)
            out.append(nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _node_stmt(node: LDNode) -> str:
    parts = [str(node.id), f"ElementType={_quote(node.element_type)}", f"Name={_quote(node.name)}"]
    parts.extend(f"{k}={_quote(v)}" for k, v in node.params)
    return f"G.add_node({', '.join(parts)})"


def to_metaprogram(graph: LDGraph) -> str:
    """Render as ``G.add_node``/``G.add_edge`` statements.

    Depth-first from the smallest unvisited id, successors in ascending id
    order; a node's statement is emitted on first visit and each edge right
    before its target is (possibly) visited.
    """
    check_valid(graph)
    lines = []
    visited = set()
    for start in graph.node_ids:
        if start in visited:
            continue
        visited.add(start)
        lines.append(_node_stmt(graph.node(start)))
        stack = [iter(sorted(graph.out_edges(start), key=lambda e: (e.dst, e.edge_type)))]
        while stack:
            edge = next(stack[-1], None)
            if edge is None:
                stack.pop()
                continue
            lines.append(f"G.add_edge({edge.src}, {edge.dst}, type={_quote(edge.edge_type)})")
            if edge.dst not in visited:
                visited.add(edge.dst)
                lines.append(_node_stmt(graph.node(edge.dst)))
                stack.append(iter(sorted(graph.out_edges(edge.dst), key=lambda e: (e.dst, e.edge_type))))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_metaprogram(text: str) -> LDGraph:
    nodes: dict[int, LDNode] = {}
    edges = []
    # statements are "\n"-separated; other line-break characters may sit inside quotes
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip(" \t\r")
        if not line or line in _PRELUDE:
            continue
        m = _NODE_RE.match(line)
        if m:
            nid = int(m.group("id"))
            if nid in nodes:
                raise ParseError(f"node {nid} is declared twice", lineno)
            attrs = {}
            for kv in _KV_RE.finditer(m.group("kv")):
                key = kv.group("key")
                if key in attrs:
                    raise ParseError(f"attribute {key} repeated", lineno)
                attrs[key] = _unquote(kv.group("val"), lineno)
            etype = attrs.pop("ElementType", None)
            if etype is None:
                raise ParseError("add_node without ElementType", lineno)
            if etype not in ELEMENT_TYPES:
                raise SchemaError(f"line {lineno}: unknown ElementType {etype!r}")
            name = attrs.pop("Name", "")
            if any(k in RESERVED_KEYS for k in attrs):
                raise ParseError("reserved attribute used as parameter", lineno)
            nodes[nid] = LDNode(nid, etype, name, attrs)
            continue
        m = _EDGE_RE.match(line)
        if m:
            edges.append((lineno, LDEdge(int(m.group("src")), int(m.group("dst")), _unquote(m.group("type"), lineno))))
            continue
        raise ParseError(f"not a metaprogram statement: {line[:60]!r}", lineno)
    for lineno, e in edges:
        for end in (e.src, e.dst):
            if end not in nodes:
                raise WiringError(f"line {lineno}: add_edge references undeclared node {end}")
    graph, _ = normalize_ids(nodes.values(), [e for _, e in edges])
    return check_valid(graph)


# -- dispatch -----------------------------------------------------------------


def render(graph: LDGraph, fmt) -> str:
    fmt = FormatKind.parse(fmt)
    if fmt is FormatKind.XML:
        from .xml_codec import emit_xml

        return emit_xml(graph)
    if fmt is FormatKind.JSON:
        return to_json_text(graph)
    return to_metaprogram(graph)


def parse(text: str, fmt, lenient: bool = False) -> LDGraph:
    fmt = FormatKind.parse(fmt)
    if fmt is FormatKind.XML:
        from .xml_codec import parse_xml

        return parse_xml(text, lenient=lenient)
    if fmt is FormatKind.JSON:
        return parse_json_text(text)
    return parse_metaprogram(text)


_FENCE_RE = re.compile(r"^\s*```[A-Za-z0-9_+-]*\s*\n(?P<body>.*?)\n?\s*```\s*$", re.S)


def strip_fences(text: str) -> str:
    """Drop a surrounding Markdown code fence (```xml, ```json, ```python, ...)."""
    m = _FENCE_RE.match(text)
    return m.group("body") if m else text


def try_parse(text: str, fmt, lenient: bool = False):
    """Parse, returning ``(graph, None)`` or ``(None, error)`` for data errors."""
    try:
        return parse(text, fmt, lenient=lenient), None
    except LadderError as exc:
        return None, exc
