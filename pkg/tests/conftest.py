from __future__ import annotations

import sys
from pathlib import Path

import pytest

from ladder_forge.graph import LDEdge, LDGraph, LDNode

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

GOLDEN = TESTS / "golden"

# Two contacts in parallel enable a comparison block (one constant input),
# whose output drives a coil.
COMPARE_BLOCK_XML = """<?xml version="1.0" encoding="UTF-8"?>
<Program>
  <Rung>
    <Element ElementType="NormallyOpen" Row="0" Col="0" Name="X0010"/>
    <Element ElementType="NormallyOpen" Row="1" Col="0" Name="X0011"/>
    <Element ElementType="VertLine" Row="0" Col="1"/>
    <Element ElementType="HorzLine" Row="0" Col="2"/>
    <Element ElementType="FunctionBlock" Row="0" Col="3" Name="LE_SPD" Param.kind="LE"/>
    <Element ElementType="Variable" Row="1" Col="3" Name="20"/>
    <Element ElementType="HorzLine" Row="0" Col="4"/>
    <Element ElementType="StandardCoil" Row="0" Col="5" Name="Y0020"/>
  </Rung>
</Program>
"""


def chain(n: int, prefix: str = "X") -> LDGraph:
    """n-node Flow chain: contacts ending in one coil."""
    nodes = [LDNode(i, "NormallyOpen", f"{prefix}{i}") for i in range(n - 1)]
    nodes.append(LDNode(n - 1, "StandardCoil", f"Y{n - 1}"))
    edges = [LDEdge(i, i + 1, "Flow") for i in range(n - 1)]
    return LDGraph(tuple(nodes), tuple(edges))


def compare_block_graph() -> LDGraph:
    nodes = (
        LDNode(0, "NormallyOpen", "X0010"),
        LDNode(1, "NormallyOpen", "X0011"),
        LDNode(2, "FunctionBlock", "LE_SPD", {"kind": "LE"}),
        LDNode(3, "Variable", "20"),
        LDNode(4, "StandardCoil", "Y0020"),
    )
    edges = (
        LDEdge(0, 2, "Enable"),
        LDEdge(1, 2, "Enable"),
        LDEdge(2, 3, "Input1"),
        LDEdge(2, 4, "Output"),
    )
    return LDGraph(nodes, edges)


def worked_pair() -> tuple[LDGraph, LDGraph]:
    """Ground truth with 6 nodes / 5 edges and a prediction with 5 nodes / 4 edges.

    The prediction drops one port variable (and its edge) and mistypes the
    block's output edge, so 5 nodes and 3 edges match.
    """
    gt_nodes = (
        LDNode(0, "NormallyOpen", "X001"),
        LDNode(1, "NormallyClosed", "X002"),
        LDNode(2, "FunctionBlock", "MOV1", {"kind": "MOVE"}),
        LDNode(3, "Variable", "D100"),
        LDNode(4, "Variable", "D200"),
        LDNode(5, "StandardCoil", "Y010"),
    )
    gt_edges = (
        LDEdge(0, 1, "Flow"),
        LDEdge(1, 2, "Enable"),
        LDEdge(2, 3, "Input1"),
        LDEdge(2, 4, "Input2"),
        LDEdge(2, 5, "Output"),
    )
    pred_nodes = gt_nodes[:4] + (gt_nodes[5].with_id(4),)
    pred_edges = (
        LDEdge(0, 1, "Flow"),
        LDEdge(1, 2, "Enable"),
        LDEdge(2, 3, "Input1"),
        LDEdge(2, 4, "Flow"),
    )
    return LDGraph(gt_nodes, gt_edges), LDGraph(pred_nodes, pred_edges)


@pytest.fixture
def compare_block():
    return compare_block_graph()


def pytest_sessionstart(session):
    import acceptance_log

    acceptance_log.SESSION_START = __import__("time").perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # acceptance criteria run last so the runtime-budget criterion sees the whole suite
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(acceptance_log.RESULTS):
        terminalreporter.write_line(acceptance_log.RESULTS[num])
