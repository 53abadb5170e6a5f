"""Graph edit distance with Levenshtein-weighted edit costs.

Every node and edge is identified by its canonical string. Deleting or
inserting an item costs the length of its string; substituting one item for
another costs the Levenshtein distance between the two strings.

Small pairs are solved exactly by branch and bound over node assignments. The
search starts from the cost of a bipartite (star-matching) assignment and
prunes with an assignment-problem lower bound (see ``_Bound``). Larger pairs
fall back to beam search, which returns an upper bound and is flagged as
approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import LDGraph, canonical_edge_string, canonical_node_string


@lru_cache(maxsize=1 << 20)
def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over code points (bit-parallel, Myers/Hyyro)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    peq: dict[str, int] = {}
    for i, ch in enumerate(b):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    mask = (1 << m) - 1
    high = 1 << (m - 1)
    pv, mv, score = mask, 0, m
    for ch in a:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = (mv | ~(xh | pv)) & mask
        mh = pv & xh
        if ph & high:
            score += 1
        elif mh & high:
            score -= 1
        ph = ((ph << 1) | 1) & mask
        mh = (mh << 1) & mask
        pv = (mh | ~(xv | ph)) & mask
        mv = ph & xv
    return score


@dataclass(frozen=True)
class GedCosts:
    """Edit costs over canonical strings; override methods for other models."""

    def delete(self, s: str) -> int:
        return len(s)

    def insert(self, s: str) -> int:
        return len(s)

    def substitute(self, a: str, b: str) -> int:
        return levenshtein(a, b)

    def match_lists(self, left: list[str], right: list[str]) -> int:
        """Cheapest way to turn one multiset of strings into another."""
        if not left:
            return sum(self.insert(s) for s in right)
        if not right:
            return sum(self.delete(s) for s in left)
        if len(left) == 1 and len(right) == 1:
            return min(self.substitute(left[0], right[0]), self.delete(left[0]) + self.insert(right[0]))
        cost = _assignment_matrix(
            np.array([[self.substitute(a, b) for b in right] for a in left], dtype=float),
            np.array([self.delete(a) for a in left], dtype=float),
            np.array([self.insert(b) for b in right], dtype=float),
        )
        rows, cols = linear_sum_assignment(cost)
        return int(round(cost[rows, cols].sum()))


DEFAULT_COSTS = GedCosts()


@dataclass(frozen=True)
class GedResult:
    cost: int
    exact: bool

    def __float__(self):
        return float(self.cost)


_BIG = 1e12


def _assignment_matrix(sub, dele, ins):
    """Square (n+m) cost matrix for an assignment with deletions/insertions."""
    n, m = sub.shape
    cost = np.zeros((n + m, n + m))
    cost[:n, :m] = sub
    cost[:n, m:] = _BIG
    cost[n:, :m] = _BIG
    if n:
        cost[np.arange(n), m + np.arange(n)] = dele
    if m:
        cost[n + np.arange(m), np.arange(m)] = ins
    return cost


class _Problem:
    """Precomputed cost tables for one (g1, g2) pair; G2 index n2 means 'deleted'."""

    def __init__(self, g1: LDGraph, g2: LDGraph, costs: GedCosts):
        self.costs = costs
        self.n1, self.n2 = len(g1.nodes), len(g2.nodes)
        n1, n2 = self.n1, self.n2
        idx1 = {n.id: i for i, n in enumerate(g1.nodes)}
        idx2 = {n.id: j for j, n in enumerate(g2.nodes)}
        s1 = [canonical_node_string(n) for n in g1.nodes]
        s2 = [canonical_node_string(n) for n in g2.nodes]

        self.node = np.zeros((n1, n2 + 1))
        for i in range(n1):
            for j in range(n2):
                self.node[i, j] = costs.substitute(s1[i], s2[j])
            self.node[i, n2] = costs.delete(s1[i])
        self.node_ins = np.array([costs.insert(s) for s in s2], dtype=float)

        self.pairs1: dict[tuple[int, int], list[str]] = {}
        for e in g1.edges:
            self.pairs1.setdefault((idx1[e.src], idx1[e.dst]), []).append(
                canonical_edge_string(e, g1.node(e.src), g1.node(e.dst))
            )
        self.pairs2: dict[tuple[int, int], list[str]] = {}
        for e in g2.edges:
            self.pairs2.setdefault((idx2[e.src], idx2[e.dst]), []).append(
                canonical_edge_string(e, g2.node(e.src), g2.node(e.dst))
            )

        # insertion cost of the G2 edges between each ordered pair (0 on the 'deleted' index)
        self.ins2 = np.zeros((n2 + 1, n2 + 1))
        for (j, b), strs in self.pairs2.items():
            self.ins2[j, b] = sum(costs.insert(s) for s in strs)
        self.ins2_total = float(self.ins2.sum())

        # for every G1 pair carrying edges: cost of that pair against every G2 pair
        self.pair_cost: dict[tuple[int, int], np.ndarray] = {}
        for (i, a), strs in self.pairs1.items():
            dele = sum(costs.delete(s) for s in strs)
            q = np.full((n2 + 1, n2 + 1), float(dele))
            for (j, b), strs2 in self.pairs2.items():
                q[j, b] = costs.match_lists(strs, strs2)
            self.pair_cost[(i, a)] = q

        self.neighbors = [set() for _ in range(n1)]
        for i, a in self.pairs1:
            self.neighbors[i].add(a)
            self.neighbors[a].add(i)

        self._stars(s1, s2, g1, g2, idx1, idx2)

    def _stars(self, s1, s2, g1, g2, idx1, idx2):
        costs = self.costs
        n1, n2 = self.n1, self.n2
        out1 = [[] for _ in range(n1)]
        in1 = [[] for _ in range(n1)]
        for (i, a), strs in self.pairs1.items():
            out1[i].extend(strs)
            in1[a].extend(strs)
        out2 = [[] for _ in range(n2)]
        in2 = [[] for _ in range(n2)]
        for (j, b), strs in self.pairs2.items():
            out2[j].extend(strs)
            in2[b].extend(strs)
        # each edge is shared by two stars, so stars carry half of its cost
        self.star_sub = np.zeros((n1, n2))
        for i in range(n1):
            for j in range(n2):
                edge = costs.match_lists(out1[i], out2[j]) + costs.match_lists(in1[i], in2[j])
                self.star_sub[i, j] = self.node[i, j] + edge / 2
        self.star_del = np.array(
            [self.node[i, n2] + sum(costs.delete(s) for s in out1[i] + in1[i]) / 2 for i in range(n1)]
        )
        self.star_ins = np.array(
            [self.node_ins[j] + sum(costs.insert(s) for s in out2[j] + in2[j]) / 2 for j in range(n2)]
        )

    def lower_bound(self, rows, cols) -> float:
        """Admissible bound on the cost of assigning ``rows`` to ``cols``/deletion."""
        if not len(rows) and not len(cols):
            return 0.0
        cost = _assignment_matrix(self.star_sub[np.ix_(rows, cols)], self.star_del[rows], self.star_ins[cols])
        r, c = linear_sum_assignment(cost)
        return float(cost[r, c].sum())

    def child_costs(self, order, i, phis: np.ndarray) -> np.ndarray:
        """Incremental cost of mapping G1 node ``order[i]`` to every G2 index.

        ``phis`` is (B, i): the images of ``order[:i]`` in each of B partial
        mappings. Returns a (B, n2+1) array; already used images are inf.
        """
        u = order[i]
        n2 = self.n2
        B = phis.shape[0]
        out = np.broadcast_to(self.node[u], (B, n2 + 1)).copy()
        if i:
            # G2 edges between the candidate and earlier images count as inserted ...
            out += self.ins2[:, phis].sum(axis=2).T + self.ins2[phis, :].sum(axis=1)
            # ... except where G1 has edges between the same nodes
            assigned = order[:i]
            for t, a in enumerate(assigned):
                if a not in self.neighbors[u]:
                    continue
                b = phis[:, t]
                q = self.pair_cost.get((u, a))
                if q is not None:
                    out += q[:, b].T - self.ins2[:, b].T
                q = self.pair_cost.get((a, u))
                if q is not None:
                    out += q[b, :] - self.ins2[b, :]
            used = np.zeros((B, n2 + 1), dtype=bool)
            np.put_along_axis(used, phis, True, axis=1)
            used[:, n2] = False
            out[used] = np.inf
        return out

    def completion(self, phi) -> float:
        """Cost of inserting every G2 node (and incident edges) left unmatched."""
        n2 = self.n2
        used = np.zeros(n2 + 1, dtype=bool)
        used[[p for p in phi if p < n2]] = True
        unused = ~used
        unused[n2] = False
        both_used = np.outer(used, used)
        return float(self.node_ins[unused[:n2]].sum() + self.ins2_total - self.ins2[both_used].sum())

    def mapping_cost(self, order, phi) -> float:
        phis = np.zeros((1, 0), dtype=int)
        total = 0.0
        for i in range(len(order)):
            total += self.child_costs(order, i, phis)[0, phi[i]]
            phis = np.append(phis, [[phi[i]]], axis=1)
        return total + self.completion(phi)


def _bipartite_mapping(p: _Problem, order) -> list[int]:
    cost = _assignment_matrix(p.star_sub, p.star_del, p.star_ins)
    rows, cols = linear_sum_assignment(cost)
    image = {int(r): (int(c) if c < p.n2 else p.n2) for r, c in zip(rows, cols) if r < p.n1}
    return [image[u] for u in order]


def _beam(p: _Problem, order, width: int) -> float:
    phis = np.zeros((1, 0), dtype=int)
    g = np.zeros(1)
    for i in range(p.n1):
        child = g[:, None] + p.child_costs(order, i, phis)
        flat = child.ravel()
        finite = np.flatnonzero(np.isfinite(flat))
        keep = finite[np.argsort(flat[finite], kind="stable")[:width]]
        states, images = np.divmod(keep, p.n2 + 1)
        phis = np.concatenate([phis[states], images[:, None]], axis=1)
        g = flat[keep]
    totals = [g[s] + p.completion(phis[s]) for s in range(len(g))]
    return min(totals)


def _branch_and_bound(p: _Problem, order, upper: float) -> float:
    """Depth-first search over node images, pruned by ``_Bound``."""
    n1, n2 = p.n1, p.n2
    best = [upper]
    bound = _Bound(p, order)

    def rec(i, phi, g):
        if i == n1:
            total = g + p.completion(phi)
            if total < best[0]:
                best[0] = total
            return
        child = p.child_costs(order, i, np.array([phi], dtype=int).reshape(1, i))[0]
        scored = []
        for j, f in bound.children(i, phi, child):
            scored.append((g + child[j] + f, j))
        scored.sort()
        for f, j in scored:
            if f >= best[0]:
                break
            rec(i + 1, phi + [j], g + child[j])

    rec(0, [], 0.0)
    return best[0]


class _Bound:
    """Lower bound on the cost still to pay after fixing the first i images.

    The remaining cost splits into three disjoint parts: (1) remaining G1 nodes
    and G2 nodes not yet used, together with their edges to already mapped
    nodes -- a linear assignment whose costs are exact for those edges; (2)
    edges with both ends among the remaining G1 nodes, and (3) likewise in G2,
    which together cost at least an unconstrained matching of the two edge
    multisets. Bounds on disjoint parts add up.
    """

    def __init__(self, p: _Problem, order):
        self.p = p
        self.order = order
        n2 = p.n2
        # Ins[j, c]: G2 edge insertions between image j and column c (0 for deletion index)
        self.ins_sym = p.ins2 + p.ins2.T
        self.edges1 = [((i, a), strs) for (i, a), strs in p.pairs1.items()]
        self.edges2 = [((j, b), strs) for (j, b), strs in p.pairs2.items()]
        self._internal: dict = {}
        self.all_cols = np.arange(n2)

    def _internal_edges(self, i, used) -> float:
        key = (i, used)
        hit = self._internal.get(key)
        if hit is None:
            rest = set(self.order[i:])
            left = [s for (a, b), strs in self.edges1 if a in rest and b in rest for s in strs]
            right = [s for (a, b), strs in self.edges2 if a not in used and b not in used for s in strs]
            hit = self.p.costs.match_lists(left, right) if (left or right) else 0.0
            self._internal[key] = hit
        return hit

    def _cross(self, rows, phi):
        """(len(rows), n2+1) node costs plus exact costs of edges to mapped nodes."""
        p = self.p
        assigned = self.order[: len(phi)]
        out = p.node[rows].copy()
        if not phi:
            return out
        images = np.array(phi)
        ins = self.ins_sym[:, images].sum(axis=1)  # over candidate columns (n2 row is 0)
        out += ins[None, :]
        for t, r in enumerate(rows):
            for a, b in zip(assigned, phi):
                q = p.pair_cost.get((r, a))
                if q is not None:
                    out[t] += q[:, b] - p.ins2[:, b]
                q = p.pair_cost.get((a, r))
                if q is not None:
                    out[t] += q[b, :] - p.ins2[b, :]
        return out

    def children(self, i, phi, child):
        """Yield (image j, bound on the cost after also mapping order[i] -> j)."""
        p = self.p
        n2 = p.n2
        u = self.order[i]
        rest = self.order[i + 1:]
        used = frozenset(b for b in phi if b < n2)
        base = self._cross(rest, phi)
        images = np.array([b for b in phi if b < n2], dtype=int)
        col_ins = p.node_ins + (self.ins_sym[:n2, images].sum(axis=1) if len(images) else 0.0)
        for j in range(n2 + 1):
            if not np.isfinite(child[j]):
                continue
            used_j = used | {j} if j < n2 else used
            cols = [c for c in range(n2) if c not in used_j]
            if not rest and not cols:
                yield j, self._internal_edges(i + 1, used_j)
                continue
            m = base.copy()
            ins = col_ins.copy()
            if j < n2:
                m += self.ins_sym[j][None, :]
                m[:, n2] -= self.ins_sym[j, n2]
                ins += self.ins_sym[j, :n2]
            for t, r in enumerate(rest):
                q = p.pair_cost.get((r, u))
                if q is not None:
                    m[t] += q[:, j] - p.ins2[:, j]
                q = p.pair_cost.get((u, r))
                if q is not None:
                    m[t] += q[j, :] - p.ins2[j, :]
            cost = _assignment_matrix(m[:, cols], m[:, n2], ins[cols])
            rr, cc = linear_sum_assignment(cost)
            lb = float(cost[rr, cc].sum()) + self._internal_edges(i + 1, used_j)
            yield j, math.ceil(lb - 1e-9)


def ged(
    a: LDGraph,
    b: LDGraph,
    costs: GedCosts = DEFAULT_COSTS,
    exact_limit: int = 10,
    beam_width: int = 64,
) -> GedResult:
    """Minimum total cost of node/edge edits turning ``a`` into ``b``.

    Exact when both graphs have at most ``exact_limit`` nodes; otherwise an
    upper bound from beam search (``exact=False``).
    """
    p = _Problem(a, b, costs)
    order = list(range(p.n1))
    upper = p.mapping_cost(order, _bipartite_mapping(p, order))
    if max(p.n1, p.n2) <= exact_limit:
        return GedResult(int(round(_branch_and_bound(p, order, upper + 0.5))), True)
    value = min(upper, _beam(p, order, beam_width))
    return GedResult(int(round(value)), False)
