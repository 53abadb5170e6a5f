"""Graph model for Ladder Diagram programs.

A program (one functional unit) is a single :class:`LDGraph` whose weakly
connected components are the rungs. Node ids form one global dense space and
each rung owns a contiguous run of ids.
"""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import GraphValidationError

CONTACTS = (
    "NormallyOpen",
    "NormallyClosed",
    "RisingEdgeContact",
    "FallingEdgeContact",
    "RisingEdgeNotContact",
    "FallingEdgeNotContact",
)
COILS = (
    "StandardCoil",
    "NegatedCoil",
    "SetCoil",
    "ResetCoil",
    "RisingEdgeCoil",
    "FallingEdgeCoil",
)
OTHERS = ("Inverter", "FunctionBlock", "Variable", "RisingEdge", "FallingEdge")
ELEMENT_TYPES = frozenset(CONTACTS + COILS + OTHERS)
LINE_TYPES = frozenset({"VertLine", "HorzLine", "MultiHorzLine"})

RESERVED_KEYS = frozenset({"ElementType", "Name"})
PARAM_KEY_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
EDGE_TYPE_RE = re.compile(r"(?:Flow|Enable|Output|Input[1-9][0-9]*)\Z")

FLOW = "Flow"
ENABLE = "Enable"
OUTPUT = "Output"


def input_port(k: int) -> str:
    if k < 1:
        raise ValueError(f"input port index must be >= 1, got {k}")
    return f"Input{k}"


def port_index(edge_type: str) -> int | None:
    """Return ``k`` for an ``Input<k>`` edge type, else None."""
    if edge_type.startswith("Input") and EDGE_TYPE_RE.match(edge_type):
        return int(edge_type[5:])
    return None


def _normalize_params(params) -> tuple[tuple[str, str], ...]:
    if isinstance(params, Mapping):
        items = params.items()
    else:
        items = params
    return tuple(sorted(((str(k), str(v)) for k, v in items), key=lambda kv: kv[0]))


@dataclass(frozen=True)
class LDNode:
    id: int
    element_type: str
    name: str = ""
    params: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", _normalize_params(self.params))

    def with_id(self, new_id: int) -> "LDNode":
        return LDNode(new_id, self.element_type, self.name, self.params)

    @property
    def param_dict(self) -> dict[str, str]:
        return dict(self.params)


@dataclass(frozen=True, order=True)
class LDEdge:
    src: int
    dst: int
    edge_type: str = FLOW


@dataclass(frozen=True)
class LDGraph:
    """Immutable DAG of LD elements.

    ``nodes`` are kept sorted by id and ``edges`` by ``(src, dst, edge_type)``
    so that two graphs built from the same parts compare equal field-wise.
    Use :func:`graph_equal` for the id-independent comparison used by metrics.
    """

    nodes: tuple[LDNode, ...] = ()
    edges: tuple[LDEdge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))

    def __len__(self):
        return len(self.nodes)

    @cached_property
    def _by_id(self) -> dict[int, LDNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _out(self) -> dict[int, list[LDEdge]]:
        out = defaultdict(list)
        for e in self.edges:
            out[e.src].append(e)
        return dict(out)

    @cached_property
    def _in(self) -> dict[int, list[LDEdge]]:
        inc = defaultdict(list)
        for e in self.edges:
            inc[e.dst].append(e)
        return dict(inc)

    def node(self, node_id: int) -> LDNode:
        return self._by_id[node_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._by_id

    @property
    def node_ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def out_edges(self, node_id: int) -> list[LDEdge]:
        return self._out.get(node_id, [])

    def in_edges(self, node_id: int) -> list[LDEdge]:
        return self._in.get(node_id, [])

    def successors(self, node_id: int) -> list[int]:
        return sorted({e.dst for e in self.out_edges(node_id)})

    def predecessors(self, node_id: int) -> list[int]:
        return sorted({e.src for e in self.in_edges(node_id)})

    def components(self) -> list[list[int]]:
        """Weakly connected components as sorted id lists, ordered by min id.

        Edges with a missing endpoint are ignored.
        """
        parent = {n.id: n.id for n in self.nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            if e.src in parent and e.dst in parent:
                a, b = find(e.src), find(e.dst)
                if a != b:
                    parent[max(a, b)] = min(a, b)
        groups = defaultdict(list)
        for n in self.nodes:
            groups[find(n.id)].append(n.id)
        return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])

    @cached_property
    def rung_starts(self) -> tuple[int, ...]:
        return tuple(c[0] for c in self.components())

    def to_networkx(self):
        import networkx as nx

        g = nx.MultiDiGraph()
        for n in self.nodes:
            g.add_node(n.id, ElementType=n.element_type, Name=n.name, **dict(n.params))
        for e in self.edges:
            g.add_edge(e.src, e.dst, key=e.edge_type, type=e.edge_type)
        return g


def normalize_ids(nodes: Iterable[LDNode], edges: Iterable[LDEdge]) -> tuple[LDGraph, dict[int, int]]:
    """Re-densify ids so they are 0..n-1 and every component is contiguous.

    Relative id order is kept inside each component; components are ordered by
    their smallest original id. Returns the new graph and the old->new map.
    Edges must reference existing ids.
    """
    nodes = sorted(nodes, key=lambda n: n.id)
    edges = list(edges)
    raw = LDGraph(tuple(nodes), tuple(edges))
    order = [i for comp in raw.components() for i in comp]
    mapping = {old: new for new, old in enumerate(order)}
    new_nodes = tuple(raw.node(old).with_id(mapping[old]) for old in order)
    new_edges = tuple(LDEdge(mapping[e.src], mapping[e.dst], e.edge_type) for e in edges)
    return LDGraph(new_nodes, new_edges), mapping


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    nodes: tuple[int, ...] = ()
    edges: tuple[tuple[int, int, str], ...] = field(default=())

    def __str__(self):
        return f"{self.kind}: {self.message}"


ValidationReport = list  # list[Violation]


def _cycles(ids: Sequence[int], edges: Sequence[LDEdge]) -> list[list[int]]:
    """Strongly connected components that contain a cycle (iterative Tarjan)."""
    adj = defaultdict(list)
    self_loops = set()
    for e in edges:
        adj[e.src].append(e.dst)
        if e.src == e.dst:
            self_loops.add(e.src)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack = set()
    stack: list[int] = []
    result = []
    counter = 0
    for root in ids:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                if len(comp) > 1 or v in self_loops:
                    result.append(sorted(comp))
    return sorted(result)


def validate(graph: LDGraph) -> list[Violation]:
    """Check every LDGraph invariant; an empty list means the graph is valid."""
    report: list[Violation] = []
    ids = [n.id for n in graph.nodes]
    id_set = set(ids)

    dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
    if dupes:
        report.append(Violation("duplicate_node_id", f"node ids used more than once: {dupes}", tuple(dupes)))
    expected = set(range(len(id_set)))
    if id_set != expected:
        bad = sorted(id_set - expected) + sorted(i for i in ids if i < 0)
        missing = sorted(expected - id_set)
        report.append(
            Violation(
                "id_density",
                f"node ids must be 0..{len(id_set) - 1}; missing {missing}, out of range {sorted(set(bad))}",
                tuple(sorted(set(bad))),
            )
        )

    for n in graph.nodes:
        if n.element_type not in ELEMENT_TYPES:
            report.append(
                Violation("unknown_element_type", f"node {n.id} has unknown element type {n.element_type!r}", (n.id,))
            )
        keys = [k for k, _ in n.params]
        seen = [k for k, c in Counter(keys).items() if c > 1]
        if seen:
            report.append(Violation("duplicate_param_key", f"node {n.id} repeats param keys {seen}", (n.id,)))
        for k in keys:
            if not PARAM_KEY_RE.match(k) or k in RESERVED_KEYS:
                report.append(Violation("bad_param_key", f"node {n.id} has invalid param key {k!r}", (n.id,)))

    good_edges = []
    triples = Counter((e.src, e.dst, e.edge_type) for e in graph.edges)
    for t, c in sorted(triples.items()):
        if c > 1:
            report.append(Violation("duplicate_edge", f"edge {t[0]}->{t[1]} ({t[2]}) repeated {c} times", (), (t,)))
    for e in graph.edges:
        t = (e.src, e.dst, e.edge_type)
        if e.src not in id_set or e.dst not in id_set:
            report.append(Violation("dangling_edge", f"edge {e.src}->{e.dst} references a missing node", (), (t,)))
            continue
        if not EDGE_TYPE_RE.match(e.edge_type):
            report.append(Violation("bad_edge_type", f"edge {e.src}->{e.dst} has invalid type {e.edge_type!r}", (), (t,)))
        good_edges.append(e)

    for comp in _cycles(sorted(id_set), good_edges):
        report.append(Violation("cycle", f"nodes {comp} form a directed cycle", tuple(comp)))

    position = {i: p for p, i in enumerate(sorted(id_set))}
    split = [c for c in graph.components() if position[c[-1]] - position[c[0]] + 1 != len(c)]
    if split:
        flat = tuple(sorted(i for c in split for i in c))
        report.append(
            Violation("non_contiguous_component", f"components {split} do not occupy contiguous id runs", flat)
        )
    return report


def check_valid(graph: LDGraph) -> LDGraph:
    report = validate(graph)
    if report:
        raise GraphValidationError(report)
    return graph


# -- canonical strings ----------------------------------------------------------

_ESCAPE_RE = re.compile(r"([\\|=>@])")


def _esc(text: str) -> str:
    return _ESCAPE_RE.sub(r"\\\1", text)


def canonical_node_string(node: LDNode) -> str:
    """``ElementType|name|k1=v1|...`` with params in key order.

    Backslash, ``|``, ``=``, ``>`` and ``@`` inside names and values are
    backslash-escaped so the string stays injective.
    """
    parts = [node.element_type, _esc(node.name)]
    parts.extend(f"{_esc(k)}={_esc(v)}" for k, v in node.params)
    return "|".join(parts)


def canonical_edge_string(edge: LDEdge, src_node: LDNode, dst_node: LDNode) -> str:
    return f"{canonical_node_string(src_node)}->{canonical_node_string(dst_node)}@{edge.edge_type}"


def node_strings(graph: LDGraph) -> Counter:
    return Counter(canonical_node_string(n) for n in graph.nodes)


def edge_strings(graph: LDGraph) -> Counter:
    return Counter(canonical_edge_string(e, graph.node(e.src), graph.node(e.dst)) for e in graph.edges)


def complexity(graph: LDGraph) -> int:
    return len(graph.nodes) + len(graph.edges)


def graph_equal(a: LDGraph, b: LDGraph) -> bool:
    """Content equality: same multiset of node strings and of edge strings."""
    return node_strings(a) == node_strings(b) and edge_strings(a) == edge_strings(b)
