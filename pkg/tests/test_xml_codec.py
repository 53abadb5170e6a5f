from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import COMPARE_BLOCK_XML, GOLDEN, compare_block_graph
from golden_graphs import or_branch, two_rungs
from ladder_forge.editops import edit_graph
from ladder_forge.errors import LayoutError, ParseError, SchemaError, WiringError
from ladder_forge.graph import LDEdge, LDGraph, LDNode, graph_equal, validate
from ladder_forge.synthgen import SynthParams, generate_graph
from ladder_forge.xml_codec import emit_xml, graph_to_document, parse_xml, read_xml_document


def rung(*elements: str) -> str:
    body = "\n".join(f"    <Element {e}/>" for e in elements)
    return f'<?xml version="1.0" encoding="UTF-8"?>\n<Program>\n  <Rung>\n{body}\n  </Rung>\n</Program>\n'


def edges_of(g):
    return sorted((e.src, e.dst, e.edge_type) for e in g.edges)


class TestParse:
    def test_minimal_series_rung(self):
        g = parse_xml(
            rung(
                'ElementType="NormallyOpen" Row="0" Col="0" Name="X0"',
                'ElementType="HorzLine" Row="0" Col="1"',
                'ElementType="StandardCoil" Row="0" Col="2" Name="Y0"',
            )
        )
        assert [(n.id, n.element_type) for n in g.nodes] == [(0, "NormallyOpen"), (1, "StandardCoil")]
        assert edges_of(g) == [(0, 1, "Flow")]

    def test_parallel_or_branch(self):
        g = parse_xml(
            rung(
                'ElementType="NormallyOpen" Row="0" Col="0" Name="X0"',
                'ElementType="NormallyClosed" Row="1" Col="0" Name="X1"',
                'ElementType="VertLine" Row="0" Col="1"',
                'ElementType="StandardCoil" Row="0" Col="2" Name="Y0"',
            )
        )
        assert edges_of(g) == [(0, 2, "Flow"), (1, 2, "Flow")]

    def test_or_branch_matches_enumerated_grid_connectivity(self):
        # Enumerate the 2-row grid by hand: the VertLine in column 1 shorts the
        # boundaries left and right of it on both rows into one wire; each
        # element whose right side touches that wire feeds each element whose
        # left side touches it.
        wire = {(0, 1), (0, 2), (1, 1), (1, 2)}
        elements = {"X0": (0, 0), "X1": (1, 0), "Y0": (0, 2)}
        expected = sorted(
            (a, b)
            for a, b in itertools.permutations(elements, 2)
            if (elements[a][0], elements[a][1] + 1) in wire and elements[b] in wire
        )
        g = parse_xml(GOLDEN.joinpath("or_branch.xml").read_text())
        names = {n.id: n.name for n in g.nodes}
        assert sorted((names[e.src], names[e.dst]) for e in g.edges) == expected

    def test_compare_block_rung(self, compare_block):
        g = parse_xml(COMPARE_BLOCK_XML)
        assert graph_equal(g, compare_block)
        assert edges_of(g) == edges_of(compare_block)

    def test_multihorzline_spans_cells(self):
        g = parse_xml(
            rung(
                'ElementType="NormallyOpen" Row="0" Col="0" Name="X0"',
                'ElementType="MultiHorzLine" Row="0" Col="1" Length="3"',
                'ElementType="StandardCoil" Row="0" Col="4" Name="Y0"',
            )
        )
        assert edges_of(g) == [(0, 1, "Flow")]

    def test_ids_follow_coordinates_across_rungs(self):
        g = parse_xml(GOLDEN.joinpath("two_rungs.xml").read_text())
        assert g.rung_starts == (0, 3)
        names = [n.name for n in g.nodes]
        assert names == ["L6832", "M3119", "M0094", "T7631", "TOF7897", "D0644", "M2225", "Y5262"]

    def test_parameters_and_escaping(self):
        g = parse_xml(rung('ElementType="FunctionBlock" Row="0" Col="0" Name="a&amp;&quot;b" Param.kind="GE" Param.lim="&lt;20"'))
        node = g.nodes[0]
        assert node.name == 'a&"b' and node.param_dict == {"kind": "GE", "lim": "<20"}
        assert graph_equal(parse_xml(emit_xml(g)), g)

    def test_node_count_is_non_line_count(self):
        doc = read_xml_document(COMPARE_BLOCK_XML)
        non_lines = [e for e in doc.rungs[0] if not e.is_line]
        assert len(parse_xml(COMPARE_BLOCK_XML).nodes) == len(non_lines)


class TestParseErrors:
    def test_malformed_xml_has_position(self):
        with pytest.raises(ParseError) as err:
            parse_xml("<Program>\n  <Rung>\n</Program>")
        assert err.value.line == 3

    def test_unknown_element_type(self):
        with pytest.raises(SchemaError, match="Spring"):
            parse_xml(rung('ElementType="Spring" Row="0" Col="0"'))

    def test_dangling_vertline(self):
        with pytest.raises(WiringError, match=r"rung 0.*row 3, col 7"):
            parse_xml(
                rung(
                    'ElementType="NormallyOpen" Row="0" Col="0" Name="X0"',
                    'ElementType="VertLine" Row="3" Col="7"',
                )
            )

    def test_unknown_attribute_strict_vs_lenient(self):
        text = rung('ElementType="NormallyOpen" Row="0" Col="0" Name="X0" Colour="red"')
        with pytest.raises(SchemaError, match="Colour"):
            parse_xml(text)
        assert len(parse_xml(text, lenient=True).nodes) == 1

    def test_length_only_on_multihorzline(self):
        with pytest.raises(SchemaError, match="Length"):
            parse_xml(rung('ElementType="HorzLine" Row="0" Col="0" Length="2"'))
        with pytest.raises(SchemaError, match="Length"):
            parse_xml(rung('ElementType="MultiHorzLine" Row="0" Col="0"'))

    def test_overlapping_cells(self):
        with pytest.raises(SchemaError, match="occupy"):
            parse_xml(rung('ElementType="NormallyOpen" Row="0" Col="0" Name="A"', 'ElementType="NormallyOpen" Row="0" Col="0" Name="B"'))

    def test_shorted_element(self):
        with pytest.raises(WiringError, match="both terminals"):
            parse_xml(
                rung(
                    'ElementType="VertLine" Row="0" Col="0"',
                    'ElementType="NormallyOpen" Row="1" Col="0" Name="A"',
                )
            )

    def test_wrong_root(self):
        with pytest.raises(SchemaError, match="Program"):
            parse_xml("<Rung/>")


class TestEmit:
    @pytest.mark.parametrize(
        "name, graph",
        [("compare_block.xml", compare_block_graph()), ("or_branch.xml", or_branch()), ("two_rungs.xml", two_rungs())],
    )
    def test_golden_bytes(self, name, graph):
        assert emit_xml(graph) == GOLDEN.joinpath(name).read_text(encoding="utf-8")

    def test_singleton(self):
        g = LDGraph((LDNode(0, "StandardCoil", "Y0"),))
        doc = graph_to_document(g)
        assert len(doc.rungs) == 1 and len(doc.rungs[0]) == 1
        assert graph_equal(parse_xml(emit_xml(g)), g)

    def test_empty_graph(self):
        assert parse_xml(emit_xml(LDGraph())) == LDGraph()

    def test_emit_is_deterministic(self):
        assert emit_xml(two_rungs()) == emit_xml(two_rungs())

    def test_invalid_graph_rejected(self):
        from ladder_forge.errors import GraphValidationError

        with pytest.raises(GraphValidationError):
            emit_xml(LDGraph((LDNode(1, "NormallyOpen", "A"),)))

    def test_non_series_parallel_wiring_is_a_layout_error(self):
        # a->c, a->d, b->d: the 'N' shape has no ladder drawing
        nodes = tuple(LDNode(i, "NormallyOpen", n) for i, n in enumerate("abcd"))
        g = LDGraph(nodes, (LDEdge(0, 2), LDEdge(0, 3), LDEdge(1, 3)))
        assert validate(g) == []
        with pytest.raises(LayoutError):
            emit_xml(g)

    def test_gapped_input_ports_are_a_layout_error(self):
        g = LDGraph((LDNode(0, "FunctionBlock", "F"), LDNode(1, "Variable", "V")), (LDEdge(0, 1, "Input2"),))
        with pytest.raises(LayoutError):
            emit_xml(g)

    def test_round_trip_on_synthetic_graphs(self):
        for i in range(300):
            g = generate_graph(SynthParams(max_nodes=25, branch_prob=0.5, fb_prob=0.4, max_rungs=4), i)
            back = parse_xml(emit_xml(g))
            assert graph_equal(back, g), i

    def test_round_trip_preserves_coordinate_id_order(self):
        g = parse_xml(COMPARE_BLOCK_XML)
        assert parse_xml(emit_xml(g)) == g


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 2**32), st.sampled_from([0.0, 0.1, 0.3]))
def test_whatever_emits_parses_back_equal(index, seed, tau):
    """Edited graphs are often not drawable; the ones that are must round-trip."""
    g = edit_graph(generate_graph(SynthParams(branch_prob=0.5, fb_prob=0.5), index), tau, seed)
    try:
        text = emit_xml(g)
    except LayoutError:
        return
    assert graph_equal(parse_xml(text), g)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_parse_output_is_acyclic_and_valid(index):
    g = parse_xml(emit_xml(generate_graph(SynthParams(), index)))
    assert validate(g) == []


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=8), st.dictionaries(st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True), st.text(max_size=5), max_size=2))
def test_names_and_params_round_trip_or_are_refused(name, params):
    params.pop("name", None)
    g = LDGraph((LDNode(0, "FunctionBlock", name, params),))
    try:
        text = emit_xml(g)
    except SchemaError:
        return
    assert parse_xml(text) == g


def test_control_characters_are_refused():
    with pytest.raises(SchemaError, match="U\\+0001"):
        emit_xml(LDGraph((LDNode(0, "StandardCoil", "a\x01"),)))
