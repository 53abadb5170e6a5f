"""Hand-built graphs whose renderings are frozen under tests/golden/."""

from __future__ import annotations

from ladder_forge.graph import LDEdge, LDGraph, LDNode


def or_branch() -> LDGraph:
    """Two contacts in parallel feeding one coil."""
    return LDGraph(
        (LDNode(0, "NormallyOpen", "X0"), LDNode(1, "NormallyClosed", "X1"), LDNode(2, "StandardCoil", "Y0")),
        (LDEdge(0, 2, "Flow"), LDEdge(1, 2, "Flow")),
    )


def two_rungs() -> LDGraph:
    """Rung 1: contact splitting to two coils. Rung 2: contact, timer with preset, two coils."""
    nodes = (
        LDNode(0, "NormallyOpen", "L6832"),
        LDNode(1, "StandardCoil", "M3119"),
        LDNode(2, "StandardCoil", "M0094"),
        LDNode(3, "NormallyClosed", "T7631"),
        LDNode(4, "FunctionBlock", "TOF7897", {"kind": "TOF"}),
        LDNode(5, "Variable", "D0644"),
        LDNode(6, "StandardCoil", "M2225"),
        LDNode(7, "SetCoil", "Y5262"),
    )
    edges = (
        LDEdge(0, 1, "Flow"),
        LDEdge(0, 2, "Flow"),
        LDEdge(3, 4, "Enable"),
        LDEdge(4, 5, "Input1"),
        LDEdge(4, 6, "Output"),
        LDEdge(4, 7, "Output"),
    )
    return LDGraph(nodes, edges)


def two_node_chain() -> LDGraph:
    return LDGraph((LDNode(0, "NormallyOpen", "X0"), LDNode(1, "StandardCoil", "Y0")), (LDEdge(0, 1, "Flow"),))
