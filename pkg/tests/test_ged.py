from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import worked_pair, chain, compare_block_graph
from gedutil import as_dict, random_multi_edge_graph, random_small_graph
from oracles import brute_force_ged, levenshtein_dp
from ladder_forge.ged import DEFAULT_COSTS, GedCosts, ged, levenshtein
from ladder_forge.graph import (
    LDEdge,
    LDGraph,
    LDNode,
    canonical_edge_string,
    canonical_node_string,
    graph_equal,
    normalize_ids,
)
from ladder_forge.synthgen import SynthParams, generate_graph


class TestLevenshtein:
    @pytest.mark.parametrize(
        "a, b, d",
        [("", "abc", 3), ("abc", "", 3), ("", "", 0), ("kitten", "sitting", 3), ("flaw", "lawn", 2), ("조그고속", "조그저속", 1)],
    )
    def test_known_values(self, a, b, d):
        assert levenshtein(a, b) == d

    def test_long_strings_beyond_one_machine_word(self):
        rng = random.Random(11)
        for _ in range(30):
            a = "".join(rng.choice("abcd") for _ in range(rng.randint(60, 150)))
            b = "".join(rng.choice("abcd") for _ in range(rng.randint(60, 150)))
            assert levenshtein(a, b) == levenshtein_dp(a, b)

    @settings(max_examples=500, deadline=None)
    @given(st.text("abcxyz|=", max_size=14), st.text("abcxyz|=", max_size=14))
    def test_matches_dp_oracle(self, a, b):
        assert levenshtein(a, b) == levenshtein_dp(a, b)
        assert levenshtein(a, b) == levenshtein(b, a)


class TestCosts:
    def test_default_costs(self):
        c = GedCosts()
        assert c.delete("abc") == c.insert("abc") == 3
        assert c.substitute("abc", "abd") == 1
        assert c.substitute("abc", "abc") == 0

    def test_match_lists(self):
        c = DEFAULT_COSTS
        assert c.match_lists([], ["ab", "c"]) == 3
        assert c.match_lists(["ab"], []) == 2
        assert c.match_lists(["abc", "xyz"], ["xyw", "abc"]) == 1
        # substitution never beats delete + insert
        assert c.match_lists(["aaaa"], ["b"]) == 4


def name_change(g: LDGraph, nid: int, name: str) -> LDGraph:
    return LDGraph(tuple(n if n.id != nid else LDNode(n.id, n.element_type, name, n.params) for n in g.nodes), g.edges)


def drop_node(g: LDGraph, nid: int) -> LDGraph:
    return normalize_ids([n for n in g.nodes if n.id != nid], [e for e in g.edges if nid not in (e.src, e.dst)])[0]


class TestGed:
    def test_identity(self, compare_block):
        r = ged(compare_block, compare_block)
        assert r.cost == 0 and r.exact

    def test_empty_vs_graph_is_total_size(self, compare_block):
        total = sum(len(canonical_node_string(n)) for n in compare_block.nodes)
        total += sum(len(canonical_edge_string(e, compare_block.node(e.src), compare_block.node(e.dst))) for e in compare_block.edges)
        assert ged(LDGraph(), compare_block).cost == total
        assert ged(compare_block, LDGraph()).cost == total

    def test_one_node_deleted(self):
        g = chain(4)
        h = drop_node(g, 3)
        removed = g.node(3)
        expected = len(canonical_node_string(removed)) + len(canonical_edge_string(g.edges[2], g.node(2), removed))
        assert ged(g, h).cost == expected == brute_force_ged(as_dict(g), as_dict(h))

    def test_name_change(self):
        g = chain(3)  # X0 -> X1 -> Y2
        h = name_change(g, 0, "X9")
        # the node costs 1; its one incident edge string also differs by 1
        assert ged(g, h).cost == 2 == brute_force_ged(as_dict(g), as_dict(h))

    def test_worked_pair(self):
        gt, pred = worked_pair()
        assert ged(gt, pred).cost == brute_force_ged(as_dict(gt), as_dict(pred))

    def test_matches_brute_force_on_random_small_pairs(self):
        rng = random.Random(2024)
        graphs = [random_small_graph(rng) for _ in range(24)]
        for a in graphs:
            for b in graphs:
                r = ged(a, b)
                assert r.exact
                assert r.cost == brute_force_ged(as_dict(a), as_dict(b)), (a, b)

    def test_matches_brute_force_with_parallel_edges(self):
        rng = random.Random(8)
        for _ in range(400):
            a, b = random_multi_edge_graph(rng), random_multi_edge_graph(rng)
            assert ged(a, b).cost == brute_force_ged(as_dict(a), as_dict(b)), (a, b)

    def test_unrelated_ten_node_graphs_stay_fast(self):
        import time

        params = SynthParams(min_nodes=10, max_nodes=10)
        start = time.perf_counter()
        for i in range(5):
            assert ged(generate_graph(params, i), generate_graph(params, i + 50)).exact
        assert time.perf_counter() - start < 20

    def test_zero_iff_equal_and_symmetric(self):
        rng = random.Random(5)
        graphs = [random_small_graph(rng, 5) for _ in range(30)]
        for a in graphs:
            for b in graphs:
                d = ged(a, b).cost
                assert (d == 0) == graph_equal(a, b)
                assert d == ged(b, a).cost

    def test_relabel_invariance(self):
        g = compare_block_graph()
        perm = {0: 4, 1: 2, 2: 0, 3: 1, 4: 3}
        h = normalize_ids([n.with_id(perm[n.id]) for n in g.nodes], [LDEdge(perm[e.src], perm[e.dst], e.edge_type) for e in g.edges])[0]
        assert ged(g, h).cost == 0

    def test_approximate_is_an_upper_bound(self):
        for i in range(25):
            a = generate_graph(SynthParams(min_nodes=5, max_nodes=9), i)
            b = generate_graph(SynthParams(min_nodes=5, max_nodes=9), i + 100)
            exact = ged(a, b)
            approx = ged(a, b, exact_limit=0, beam_width=4)
            assert exact.exact and not approx.exact
            assert approx.cost >= exact.cost

    def test_mode_selection(self):
        big = generate_graph(SynthParams(min_nodes=14, max_nodes=14), 0)
        assert not ged(big, big).exact
        assert ged(big, big).cost == 0
        assert ged(chain(10), chain(10)).exact

    def test_float_conversion(self):
        assert float(ged(chain(2), chain(3))) == ged(chain(2), chain(3)).cost


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_triangle_inequality_on_small_graphs(seed):
    rng = random.Random(seed)
    a, b, c = (random_small_graph(rng) for _ in range(3))
    assert ged(a, c).cost <= ged(a, b).cost + ged(b, c).cost
