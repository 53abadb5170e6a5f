"""Seeded generator of synthetic ladder programs and prompt stubs.

Each rung is built as a series/parallel expression tree (contacts, optional
function block with port variables, one or more coils) and edges are derived
with the same wire rules the XML reader uses, so every generated graph can be
drawn on a ladder grid.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import CONTACTS, COILS, ENABLE, FLOW, OUTPUT, LDEdge, LDGraph, LDNode, check_valid, input_port
from .pipeline import Sample

FB_KINDS = ("TON", "TOF", "CTU", "MOVE", "GE", "LE", "ADD")
_PORTS = {"TON": 1, "TOF": 1, "CTU": 1, "MOVE": 2, "GE": 2, "LE": 2, "ADD": 3}

_KO_FB = {
    "TON": "지연 타이머", "TOF": "오프 딜레이 타이머", "CTU": "카운터", "MOVE": "값 전송",
    "GE": "이상 비교", "LE": "이하 비교", "ADD": "덧셈",
}
_EN_FB = {
    "TON": "on-delay timer", "TOF": "off-delay timer", "CTU": "up counter", "MOVE": "move",
    "GE": "greater-or-equal compare", "LE": "less-or-equal compare", "ADD": "addition",
}
_PROCESS = ("셀 이송", "전극 공급", "노칭", "스태킹", "탭 용접", "파우치 실링", "에이징", "검사")
_PROCESS_EN = ("cell transfer", "electrode feed", "notching", "stacking", "tab welding", "pouch sealing", "aging", "inspection")


@dataclass(frozen=True)
class SynthParams:
    n_samples: int = 100
    min_nodes: int = 3
    max_nodes: int = 20
    branch_prob: float = 0.3
    fb_prob: float = 0.25
    seed: int = 0
    max_rungs: int = 3

    def __post_init__(self):
        if not 1 <= self.min_nodes <= self.max_nodes:
            raise ValueError(f"need 1 <= min_nodes <= max_nodes, got {self.min_nodes}, {self.max_nodes}")
        for name in ("branch_prob", "fb_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.n_samples < 0 or self.max_rungs < 1:
            raise ValueError("n_samples must be >= 0 and max_rungs >= 1")


class _Builder:
    def __init__(self, rng: random.Random, params: SynthParams):
        self.rng = rng
        self.params = params
        self.nodes: list[LDNode] = []
        self.edges: list[LDEdge] = []
        self.used_names: set[str] = set()

    def name(self, prefix: str) -> str:
        while True:
            label = f"{prefix}{self.rng.randrange(10000):04d}"
            if label not in self.used_names:
                self.used_names.add(label)
                return label

    def add(self, element_type: str, name: str, params=()) -> int:
        nid = len(self.nodes)
        self.nodes.append(LDNode(nid, element_type, name, params))
        return nid

    # a tree is ("leaf", id) | ("S", [trees]) | ("P", [trees])
    def contacts(self, budget: int):
        """Series/parallel tree of ``budget`` contacts."""
        rng = self.rng
        if budget >= 2 and rng.random() < self.params.branch_prob:
            left = rng.randint(1, budget - 1)
            return ("P", [self.contacts(left), self.contacts(budget - left)])
        leaves = []
        for _ in range(budget):
            kind = rng.choice(CONTACTS[:2]) if rng.random() < 0.85 else rng.choice(CONTACTS)
            leaves.append(("leaf", self.add(kind, self.name(rng.choice("XMLT")))))
        return leaves[0] if len(leaves) == 1 else ("S", leaves)

    def coils(self, count: int):
        rng = self.rng
        leaves = []
        for _ in range(count):
            kind = "StandardCoil" if rng.random() < 0.6 else rng.choice(COILS)
            leaves.append(("leaf", self.add(kind, self.name(rng.choice("YM")))))
        return leaves[0] if len(leaves) == 1 else ("P", leaves)

    def rung(self, budget: int):
        rng = self.rng
        parts = []
        fb_cost = 0
        kind = None
        if budget >= 3 and rng.random() < self.params.fb_prob:
            kind = rng.choice(FB_KINDS)
            fb_cost = 1 + min(_PORTS[kind], budget - 2)
        n_coils = 1
        spare = budget - fb_cost - 1
        if spare >= 2 and rng.random() < self.params.branch_prob:
            n_coils = 2
            spare -= 1
        if spare > 0:
            parts.append(self.contacts(spare))
        if kind is not None:
            fb = self.add("FunctionBlock", self.name(kind), (("kind", kind),))
            parts.append(("leaf", fb))
            for k in range(1, fb_cost):
                label = self.name("D") if rng.random() < 0.7 else str(rng.randrange(1, 200))
                var = self.add("Variable", label)
                self.edges.append(LDEdge(fb, var, input_port(k)))
        parts.append(self.coils(n_coils))
        return parts[0] if len(parts) == 1 else ("S", parts)

    def wire(self, tree) -> tuple[list[int], list[int]]:
        """Add power-flow edges for ``tree``; return its (entry, exit) nodes."""
        kind, body = tree
        if kind == "leaf":
            return [body], [body]
        if kind == "P":
            ends = [self.wire(t) for t in body]
            return [n for e, _ in ends for n in e], [n for _, x in ends for n in x]
        entry, exits = self.wire(body[0])
        for t in body[1:]:
            nxt_entry, nxt_exits = self.wire(t)
            for u in exits:
                for v in nxt_entry:
                    self.edges.append(LDEdge(u, v, self._edge_type(u, v)))
            exits = nxt_exits
        return entry, exits

    def _edge_type(self, u: int, v: int) -> str:
        if self.nodes[v].element_type == "FunctionBlock":
            return ENABLE
        if self.nodes[u].element_type == "FunctionBlock":
            return OUTPUT
        return FLOW


def _rng(seed: int, index: int) -> random.Random:
    return random.Random(f"ladder-forge:{seed}:{index}")


def generate_graph(params: SynthParams, index: int) -> LDGraph:
    """Graph number ``index`` of the corpus defined by ``params``."""
    rng = _rng(params.seed, index)
    total = rng.randint(params.min_nodes, params.max_nodes)
    n_rungs = rng.randint(1, max(1, min(params.max_rungs, total // 3)))
    cuts = sorted(rng.sample(range(1, total), n_rungs - 1)) if n_rungs > 1 else []
    sizes = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    builder = _Builder(rng, params)
    for size in sizes:
        builder.wire(builder.rung(size))
    return check_valid(LDGraph(tuple(builder.nodes), tuple(builder.edges)))


def _describe(graph: LDGraph, rng: random.Random) -> tuple[str, str]:
    coils = [n.name for n in graph.nodes if n.element_type in COILS]
    conds = [n.name for n in graph.nodes if n.element_type in CONTACTS]
    blocks = [n for n in graph.nodes if n.element_type == "FunctionBlock"]
    variables = [n.name for n in graph.nodes if n.element_type == "Variable"]
    p = rng.randrange(len(_PROCESS))
    if rng.random() < 0.7:
        program = f"{_PROCESS[p]} {', '.join(coils)} 출력 인터락 프로그램을 만들어줘."
        details = []
        if conds:
            details.append(f"{', '.join(conds)} 조건이 성립하면")
        for fb in blocks:
            kind = fb.param_dict.get("kind", "")
            details.append(f"{fb.name} {_KO_FB.get(kind, kind)} 블록을 실행하고")
        if variables:
            details.append(f"입력값 {', '.join(variables)} 을(를) 사용하여")
        details.append(f"{', '.join(coils)} 을(를) 출력해줘.")
    else:
        program = f"Create a {_PROCESS_EN[p]} interlock program driving {', '.join(coils)}."
        details = []
        if conds:
            details.append(f"When {', '.join(conds)} are satisfied,")
        for fb in blocks:
            kind = fb.param_dict.get("kind", "")
            details.append(f"run the {_EN_FB.get(kind, kind)} block {fb.name}")
        if variables:
            details.append(f"with inputs {', '.join(variables)},")
        details.append(f"then energize {', '.join(coils)}.")
    return program, " ".join(details)


def generate_sample(params: SynthParams, index: int) -> Sample:
    graph = generate_graph(params, index)
    program, detailed = _describe(graph, _rng(params.seed, -1 - index))
    return Sample(f"S{index:05d}", program, detailed, graph)


def generate_corpus(params: SynthParams) -> list[Sample]:
    return [generate_sample(params, i) for i in range(params.n_samples)]
