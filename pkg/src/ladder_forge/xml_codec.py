"""Ladder XML <-> LDGraph.

The XML places every element on an abstract (Row, Col) grid inside a
``<Rung>``. Parsing recovers connectivity from the grid; emission synthesises a
grid layout for a graph. Format details live in docs/FORMATS.md.

Wiring model used by the parser: every cell has a left terminal (the boundary
before its column) and a right terminal (the boundary after it).

* ``HorzLine`` joins its two terminals; ``MultiHorzLine`` is ``Length``
  consecutive ``HorzLine`` cells.
* ``VertLine`` at (r, c) joins both terminals of cell (r, c) with both terminals
  of cell (r+1, c); stacked VertLines form a junction spanning several rows.
* Every set of joined terminals is a wire. Each element whose right terminal is
  on a wire gets an edge to each element whose left terminal is on it.
* ``Variable`` cells stacked directly under a ``FunctionBlock`` are its input
  ports: the block gets an ``Input<k>`` edge to the variable k rows below.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from collections import defaultdict
from dataclasses import dataclass
from xml.sax.saxutils import escape as _xml_escape

from .errors import GraphValidationError, LayoutError, ParseError, SchemaError, WiringError
from .graph import (
    ELEMENT_TYPES,
    ENABLE,
    FLOW,
    LINE_TYPES,
    OUTPUT,
    PARAM_KEY_RE,
    RESERVED_KEYS,
    LDEdge,
    LDGraph,
    LDNode,
    check_valid,
    input_port,
    normalize_ids,
    port_index,
    validate,
)

_KNOWN_ATTRS = frozenset({"ElementType", "Row", "Col", "Name", "Length"})


@dataclass(frozen=True)
class XmlElement:
    element_type: str
    row: int
    col: int
    name: str = ""
    params: tuple[tuple[str, str], ...] = ()
    length: int | None = None

    @property
    def is_line(self) -> bool:
        return self.element_type in LINE_TYPES


@dataclass(frozen=True)
class LdXmlDocument:
    rungs: tuple[tuple[XmlElement, ...], ...] = ()


def power_edge_type(src_type: str, dst_type: str) -> str:
    """Edge type implied by the grid between two power-flow elements."""
    if dst_type == "FunctionBlock":
        return ENABLE
    if src_type == "FunctionBlock":
        return OUTPUT
    return FLOW


# -- reading ------------------------------------------------------------------


def _int_attr(el, attr, rung_idx, minimum):
    raw = el.get(attr)
    if raw is None:
        raise SchemaError(f"rung {rung_idx}: <Element> is missing required attribute {attr}")
    try:
        value = int(raw)
    except ValueError:
        raise SchemaError(f"rung {rung_idx}: attribute {attr}={raw!r} is not an integer") from None
    if value < minimum:
        raise SchemaError(f"rung {rung_idx}: attribute {attr}={value} must be >= {minimum}")
    return value


def read_xml_document(text: str, lenient: bool = False) -> LdXmlDocument:
    """Parse ladder XML into rungs of grid elements without inferring edges."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}", line, col) from None
    if root.tag != "Program":
        raise SchemaError(f"root element must be <Program>, got <{root.tag}>")
    rungs = []
    for child in root:
        if child.tag != "Rung":
            if lenient:
                continue
            raise SchemaError(f"unexpected <{child.tag}> inside <Program>")
        rung_idx = len(rungs)
        elements = []
        for el in child:
            if el.tag != "Element":
                if lenient:
                    continue
                raise SchemaError(f"rung {rung_idx}: unexpected <{el.tag}> inside <Rung>")
            etype = el.get("ElementType")
            if etype is None:
                raise SchemaError(f"rung {rung_idx}: <Element> without ElementType")
            if etype not in ELEMENT_TYPES and etype not in LINE_TYPES:
                raise SchemaError(f"rung {rung_idx}: unknown ElementType {etype!r}")
            row = _int_attr(el, "Row", rung_idx, 0)
            col = _int_attr(el, "Col", rung_idx, 0)
            length = None
            if etype == "MultiHorzLine":
                length = _int_attr(el, "Length", rung_idx, 1)
            elif el.get("Length") is not None and not lenient:
                raise SchemaError(f"rung {rung_idx}: Length is only allowed on MultiHorzLine ({etype} at {row},{col})")
            params = []
            for attr, value in el.attrib.items():
                if attr.startswith("Param."):
                    key = attr[len("Param."):]
                    if not PARAM_KEY_RE.match(key) or key in RESERVED_KEYS:
                        raise SchemaError(f"rung {rung_idx}: invalid parameter attribute {attr!r}")
                    params.append((key, value))
                elif attr not in _KNOWN_ATTRS and not lenient:
                    raise SchemaError(f"rung {rung_idx}: unknown attribute {attr!r} on {etype} at {row},{col}")
            if etype in LINE_TYPES:
                name, params = "", []
            else:
                name = el.get("Name", "")
            elements.append(XmlElement(etype, row, col, name, tuple(sorted(params)), length))
        rungs.append(tuple(elements))
    return LdXmlDocument(tuple(rungs))


class _Wires:
    """Union-find over terminal points (row, boundary column)."""

    def __init__(self):
        self.parent = {}

    def find(self, p):
        parent = self.parent
        parent.setdefault(p, p)
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    def union(self, *points):
        roots = [self.find(p) for p in points]
        head = min(roots)
        for r in roots:
            self.parent[r] = head


def _rung_connectivity(rung_idx, elements):
    """Return (ordered element list, edges as index pairs with types) for one rung."""
    cells = {}
    for el in elements:
        span = el.length if el.element_type == "MultiHorzLine" else 1
        for dc in range(span):
            key = (el.row, el.col + dc)
            if key in cells:
                raise SchemaError(f"rung {rung_idx}: two elements occupy row {key[0]}, col {key[1]}")
            cells[key] = el
    wires = _Wires()
    verticals = []
    for (r, c), el in cells.items():
        if el.element_type in ("HorzLine", "MultiHorzLine"):
            wires.union((r, c), (r, c + 1))
        elif el.element_type == "VertLine":
            wires.union((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1))
            verticals.append((r, c))

    nodes = sorted((el for el in elements if not el.is_line), key=lambda e: (e.col, e.row))
    left_of = defaultdict(list)
    right_of = defaultdict(list)
    for i, el in enumerate(nodes):
        lw = wires.find((el.row, el.col))
        rw = wires.find((el.row, el.col + 1))
        if lw == rw:
            raise WiringError(
                f"rung {rung_idx}: {el.element_type} at row {el.row}, col {el.col} has both terminals on one wire"
            )
        left_of[lw].append(i)
        right_of[rw].append(i)

    for r, c in verticals:
        w = wires.find((r, c))
        if w not in left_of and w not in right_of:
            raise WiringError(f"rung {rung_idx}: VertLine at row {r}, col {c} touches no element")

    edges = []
    for w, sources in right_of.items():
        for u in sources:
            for v in left_of.get(w, ()):
                edges.append((u, v, power_edge_type(nodes[u].element_type, nodes[v].element_type)))

    index_of = {(el.row, el.col): i for i, el in enumerate(nodes)}
    for i, el in enumerate(nodes):
        if el.element_type != "FunctionBlock":
            continue
        k = 1
        while True:
            below = cells.get((el.row + k, el.col))
            if below is None or below.element_type != "Variable":
                break
            edges.append((i, index_of[(below.row, below.col)], input_port(k)))
            k += 1
    return nodes, edges


def document_to_graph(doc: LdXmlDocument) -> LDGraph:
    all_nodes = []
    all_edges = []
    for rung_idx, rung in enumerate(doc.rungs):
        elements, edges = _rung_connectivity(rung_idx, rung)
        base = len(all_nodes)
        all_nodes.extend(
            LDNode(base + i, el.element_type, el.name, el.params) for i, el in enumerate(elements)
        )
        all_edges.extend(LDEdge(base + u, base + v, t) for u, v, t in edges)
    graph, _ = normalize_ids(all_nodes, all_edges)
    report = validate(graph)
    cycles = [v for v in report if v.kind == "cycle"]
    if cycles:
        raise WiringError(f"wiring feeds back into itself: {cycles[0].message}")
    if report:
        raise GraphValidationError(report)
    return graph


def parse_xml(text: str, lenient: bool = False) -> LDGraph:
    """Parse ladder XML and infer the element graph.

    Node ids follow coordinate order: rungs in document order, then columns
    left to right, then rows top to bottom.
    """
    return document_to_graph(read_xml_document(text, lenient=lenient))


# -- writing ------------------------------------------------------------------


# characters XML 1.0 cannot carry, even as character references
_NON_XML_CHARS = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f\ud800-\udfff\ufffe\uffff]")


def _attr(value: str) -> str:
    bad = _NON_XML_CHARS.search(value)
    if bad:
        raise SchemaError(f"character U+{ord(bad.group()):04X} cannot be written to XML (in {value!r})")
    return _xml_escape(value, {'"': "&quot;", "\n": "&#10;", "\r": "&#13;", "\t": "&#9;"})


def write_xml_document(doc: LdXmlDocument) -> str:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', "<Program>"]
    for rung in doc.rungs:
        lines.append("  <Rung>")
        for el in sorted(rung, key=lambda e: (e.col, e.row)):
            parts = [f'ElementType="{el.element_type}"', f'Row="{el.row}"', f'Col="{el.col}"']
            if not el.is_line:
                parts.append(f'Name="{_attr(el.name)}"')
                parts.extend(f'Param.{k}="{_attr(v)}"' for k, v in el.params)
            if el.element_type == "MultiHorzLine":
                parts.append(f'Length="{el.length}"')
            lines.append(f"    <Element {' '.join(parts)}/>")
        lines.append("  </Rung>")
    lines.append("</Program>")
    return "\n".join(lines) + "\n"


@dataclass
class _Block:
    width: int
    height: int
    cells: list  # (row, col, XmlElement-without-coordinates factory args)
    has_fb: bool = False


def _leaf_block(node: LDNode, ports: list[LDNode]) -> _Block:
    if node.element_type != "FunctionBlock":
        return _Block(1, 1, [(0, 0, node)])
    # Pad the block so neither the block nor its port variables touch the
    # block's outer boundaries anywhere except at the row-0 terminals.
    cells = [(0, 0, "HorzLine"), (0, 1, node), (0, 2, "HorzLine")]
    cells.extend((k, 1, var) for k, var in enumerate(ports, start=1))
    return _Block(3, 1 + len(ports), cells, has_fb=True)


def _pad(row: int, col: int, length: int) -> list:
    if length <= 0:
        return []
    if length == 1:
        return [(row, col, "HorzLine")]
    return [(row, col, ("MultiHorzLine", length))]


def _layout(tree, graph, ports, left_rail: bool, right_open: bool) -> _Block:
    kind = tree[0]
    if kind == "leaf":
        node = graph.node(tree[1])
        return _leaf_block(node, [graph.node(v) for v in ports.get(node.id, [])])
    children = tree[1]
    if kind == "S":
        blocks = []
        for i, child in enumerate(children):
            blocks.append(
                _layout(child, graph, ports, left_rail and i == 0, right_open and i == len(children) - 1)
            )
        cells, x = [], 0
        for b in blocks:
            cells.extend((r, c + x, p) for r, c, p in b.cells)
            x += b.width
        return _Block(x, max(b.height for b in blocks), cells, any(b.has_fb for b in blocks))

    # parallel: branches stacked top to bottom, joined by junction columns
    blocks = [_layout(child, graph, ports, left_rail, right_open) for child in children]
    x0 = 0 if left_rail else 1
    inner = max(b.width for b in blocks)
    cells, rows, row = [], [], 0
    for b in blocks:
        rows.append(row)
        cells.extend((r + row, c + x0, p) for r, c, p in b.cells)
        if not right_open:
            cells.extend(_pad(row, x0 + b.width, inner - b.width))
        row += b.height + (1 if b.has_fb else 0)
    last = rows[-1]
    if not left_rail:
        cells.extend((r, 0, "VertLine") for r in range(last))
    width = x0 + inner
    if not right_open:
        cells.extend((r, width, "VertLine") for r in range(last))
        width += 1
    height = max(r + b.height for r, b in zip(rows, blocks))
    return _Block(width, height, cells, any(b.has_fb for b in blocks))


def _min_leaf(tree) -> int:
    if tree[0] == "leaf":
        return tree[1]
    return min(_min_leaf(t) for t in tree[1])


def _series_parallel_tree(component: list[int], succ, pred):
    """Decompose one component's wiring into a series/parallel tree.

    Nodes with the same successor set share one output wire; the wire is only
    drawable if every node it feeds has exactly that set as predecessors.
    """
    SOURCE, SINK = ("source",), ("sink",)
    wire_of = {}
    for u in component:
        out = succ[u]
        if out:
            wire_of.setdefault(out, ("wire", min(out)))
    for out, wire in wire_of.items():
        feeders = frozenset(u for u in component if succ[u] == out)
        for t in out:
            if pred[t] != feeders:
                raise LayoutError(
                    f"node {t} has predecessors {sorted(pred[t])} but shares a wire with {sorted(feeders)}; "
                    "no ladder grid can draw this fan-in/fan-out"
                )
    arcs = []
    for u in component:
        tail = SOURCE if not pred[u] else wire_of[succ[next(iter(pred[u]))]]
        head = SINK if not succ[u] else wire_of[succ[u]]
        arcs.append((tail, head, ("leaf", u)))

    changed = True
    while changed:
        changed = False
        groups = defaultdict(list)
        for a in arcs:
            groups[(a[0], a[1])].append(a)
        if any(len(g) > 1 for g in groups.values()):
            arcs = []
            for (tail, head), g in groups.items():
                if len(g) == 1:
                    arcs.append(g[0])
                else:
                    parts = []
                    for a in g:
                        parts.extend(a[2][1] if a[2][0] == "P" else [a[2]])
                    arcs.append((tail, head, ("P", sorted(parts, key=_min_leaf))))
            changed = True
            continue
        ins, outs = defaultdict(list), defaultdict(list)
        for a in arcs:
            outs[a[0]].append(a)
            ins[a[1]].append(a)
        for v in sorted(set(ins) & set(outs), key=repr):
            if v in (SOURCE, SINK) or len(ins[v]) != 1 or len(outs[v]) != 1:
                continue
            a, b = ins[v][0], outs[v][0]
            parts = []
            for t in (a[2], b[2]):
                parts.extend(t[1] if t[0] == "S" else [t])
            arcs = [x for x in arcs if x is not a and x is not b]
            arcs.append((a[0], b[1], ("S", parts)))
            changed = True
            break
    if len(arcs) != 1 or arcs[0][0] != SOURCE or arcs[0][1] != SINK:
        raise LayoutError(f"rung containing nodes {component[:8]}... is not series-parallel")
    return arcs[0][2]


def graph_to_document(graph: LDGraph) -> LdXmlDocument:
    check_valid(graph)
    ports: dict[int, list[int]] = {}
    port_vars = set()
    for e in graph.edges:
        k = port_index(e.edge_type)
        if k is None:
            continue
        src, dst = graph.node(e.src), graph.node(e.dst)
        if src.element_type != "FunctionBlock" or dst.element_type != "Variable":
            raise LayoutError(f"{e.edge_type} edge {e.src}->{e.dst} must run from a FunctionBlock to a Variable")
        if len(graph.in_edges(e.dst)) != 1 or graph.out_edges(e.dst):
            raise LayoutError(f"port variable {e.dst} must have no other connections")
        by_k = ports.setdefault(e.src, {})
        if k in by_k:
            raise LayoutError(f"function block {e.src} has two {e.edge_type} ports ({by_k[k]} and {e.dst})")
        by_k[k] = e.dst
        port_vars.add(e.dst)
    port_lists = {}
    for fb, by_k in ports.items():
        if sorted(by_k) != list(range(1, len(by_k) + 1)):
            raise LayoutError(f"function block {fb} input ports {sorted(by_k)} are not numbered 1..n")
        port_lists[fb] = [by_k[k] for k in sorted(by_k)]

    succ = {n.id: set() for n in graph.nodes}
    pred = {n.id: set() for n in graph.nodes}
    for e in graph.edges:
        if port_index(e.edge_type) is not None:
            continue
        expected = power_edge_type(graph.node(e.src).element_type, graph.node(e.dst).element_type)
        if e.edge_type != expected:
            raise LayoutError(f"edge {e.src}->{e.dst} is {e.edge_type!r} but the grid would wire it as {expected!r}")
        succ[e.src].add(e.dst)
        pred[e.dst].add(e.src)
    succ = {k: frozenset(v) for k, v in succ.items()}
    pred = {k: frozenset(v) for k, v in pred.items()}

    rungs = []
    for comp in graph.components():
        power = [i for i in comp if i not in port_vars]
        tree = _series_parallel_tree(power, succ, pred)
        block = _layout(tree, graph, port_lists, left_rail=True, right_open=True)
        rung = []
        for r, c, payload in block.cells:
            if isinstance(payload, LDNode):
                rung.append(XmlElement(payload.element_type, r, c, payload.name, payload.params))
            elif isinstance(payload, tuple):
                rung.append(XmlElement(payload[0], r, c, length=payload[1]))
            else:
                rung.append(XmlElement(payload, r, c))
        rungs.append(tuple(rung))
    return LdXmlDocument(tuple(rungs))


def emit_xml(graph: LDGraph) -> str:
    """Render a graph as ladder XML, one rung per connected component.

    Raises GraphValidationError for invalid graphs and LayoutError for valid
    graphs whose wiring cannot be drawn on a ladder grid.
    """
    return write_xml_document(graph_to_document(graph))
