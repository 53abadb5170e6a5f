"""Graph editing for negative sampling and hard-negative selection.

Random choices go through one ``random.Random(seed)`` per edit, and every draw
is a ``randrange(n)`` call made in a fixed order (see :func:`edit_graph`), so
a (graph, tau, seed) triple always yields the same edited graph.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import DegeneratePairError
from .ged import DEFAULT_COSTS, GedCosts, ged
from .graph import FLOW, LDEdge, LDGraph, LDNode, check_valid, graph_equal, normalize_ids

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class EditConfig:
    tau: float = 0.1
    num_seeds: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.num_seeds < 1:
            raise ValueError(f"num_seeds must be positive, got {self.num_seeds}")

    def seed(self, index: int) -> int:
        return (self.base_seed + index) & SEED_MASK


@dataclass
class NegativeCandidate:
    graph: LDGraph
    seed_index: int
    seed_value: int
    ged_to_gt: int | None = None
    ged_exact: bool | None = None


@dataclass(frozen=True)
class PreferencePair:
    chosen: LDGraph
    rejected: LDGraph
    tau: float
    seed_index: int
    seed_value: int
    ged: int
    ged_exact: bool

    @property
    def provenance(self) -> dict:
        return {
            "tau": self.tau,
            "seed_index": self.seed_index,
            "seed": self.seed_value,
            "ged": self.ged,
            "ged_exact": self.ged_exact,
        }


def num_deletions(n_nodes: int, tau: float) -> int:
    """floor(tau * n), computed on the decimal value of tau (0.1 * 30 is 3)."""
    return math.floor(Fraction(repr(float(tau))) * n_nodes)


def edit_graph(graph: LDGraph, tau: float, seed: int) -> LDGraph:
    """Delete floor(tau*|V|) random nodes, or duplicate one when that is zero.

    See :func:`edit_graph_traced` for the exact draw order.
    """
    return edit_graph_traced(graph, tau, seed)[0]


def edit_graph_traced(graph: LDGraph, tau: float, seed: int) -> tuple[LDGraph, dict[int, int]]:
    """Like :func:`edit_graph`, also returning where each surviving old id went.

    Delete floor(tau*|V|) random nodes, or duplicate one when that is zero.

    Deletion: ``k`` nodes are picked by a partial Fisher-Yates shuffle of the
    sorted ids (draw ``i`` is ``randrange(n - i)``). Deleted nodes are removed
    in ascending id order; each one's predecessors are wired to each of its
    successors, inheriting the type of the outgoing edge, unless that edge
    already exists.

    Duplication (``k == 0``): draw an edge index (or a node index if the graph
    has no edges), copy that edge's target node, then draw an anchor node that
    gets an edge of the same type to the copy. The copy is keyed ``-1`` in the
    returned id map.
    """
    n = len(graph.nodes)
    if n == 0:
        raise ValueError("cannot edit an empty graph")
    rng = random.Random(seed & SEED_MASK)
    k = num_deletions(n, tau)
    if k == 0:
        return _duplicate(graph, rng)

    pool = list(graph.node_ids)
    for i in range(k):
        j = i + rng.randrange(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    doomed = sorted(pool[:k])

    edges = set((e.src, e.dst, e.edge_type) for e in graph.edges)
    for x in doomed:
        preds = sorted({s for s, d, _ in edges if d == x})
        outs = sorted((d, t) for s, d, t in edges if s == x)
        edges = {e for e in edges if x not in (e[0], e[1])}
        for w in preds:
            for y, t in outs:
                if w != y:
                    edges.add((w, y, t))
    gone = set(doomed)
    nodes = [node for node in graph.nodes if node.id not in gone]
    result, id_map = normalize_ids(nodes, [LDEdge(*e) for e in sorted(edges)])
    return check_valid(result), id_map


def _duplicate(graph: LDGraph, rng: random.Random) -> tuple[LDGraph, dict[int, int]]:
    n = len(graph.nodes)
    if graph.edges:
        edge = graph.edges[rng.randrange(len(graph.edges))]
        source, edge_type = graph.node(edge.dst), edge.edge_type
    else:
        source, edge_type = graph.nodes[rng.randrange(n)], FLOW
    anchor = graph.node_ids[rng.randrange(n)]
    copy = LDNode(n, source.element_type, source.name, source.params)
    result, id_map = normalize_ids(
        list(graph.nodes) + [copy],
        list(graph.edges) + [LDEdge(anchor, n, edge_type)],
    )
    id_map[-1] = id_map.pop(n)
    return check_valid(result), id_map


def generate_negatives(graph: LDGraph, config: EditConfig = EditConfig()) -> list[NegativeCandidate]:
    """``num_seeds`` independent edits, each starting from the original graph."""
    return [
        NegativeCandidate(edit_graph(graph, config.tau, config.seed(i)), i, config.seed(i))
        for i in range(config.num_seeds)
    ]


def select_hard_negative(
    gt: LDGraph,
    candidates: Sequence[NegativeCandidate],
    costs: GedCosts = DEFAULT_COSTS,
    tau: float = EditConfig.tau,
    accept: Callable[[LDGraph], bool] | None = None,
    exact_limit: int = 10,
    beam_width: int = 64,
) -> PreferencePair:
    """Pick the candidate closest to ``gt`` by GED; ties go to the lowest seed index.

    Candidates identical to ``gt`` are never chosen; ``accept`` can veto
    further candidates (e.g. ones a target format cannot render). Each
    scored candidate gets its ``ged_to_gt`` filled in.
    """
    if not candidates:
        raise ValueError("no negative candidates to choose from")
    best = None
    for cand in sorted(candidates, key=lambda c: c.seed_index):
        if graph_equal(gt, cand.graph):
            continue
        if accept is not None and not accept(cand.graph):
            continue
        res = ged(gt, cand.graph, costs, exact_limit=exact_limit, beam_width=beam_width)
        cand.ged_to_gt, cand.ged_exact = res.cost, res.exact
        if best is None or res.cost < best.ged_to_gt:
            best = cand
    if best is None:
        raise DegeneratePairError("every negative candidate equals the ground truth or was rejected")
    return PreferencePair(gt, best.graph, tau, best.seed_index, best.seed_value, best.ged_to_gt, best.ged_exact)
