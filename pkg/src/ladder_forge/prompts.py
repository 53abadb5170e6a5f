"""System prompts and the conversation layout used for training records."""

from __future__ import annotations

from .codecs import FormatKind

_ELEMENTS = (
    "Contacts: NormallyOpen, NormallyClosed, RisingEdgeContact, FallingEdgeContact, "
    "RisingEdgeNotContact, FallingEdgeNotContact. "
    "Coils: StandardCoil, NegatedCoil, SetCoil, ResetCoil, RisingEdgeCoil, FallingEdgeCoil. "
    "Other nodes: Inverter, FunctionBlock, Variable, RisingEdge, FallingEdge."
)

SYSTEM_PROMPTS = {
    FormatKind.XML: (
        "You write PLC ladder logic. Answer with one <Program> document: each <Rung> holds "
        "<Element> entries with ElementType, Row, Col, Name and optional Param.* attributes, "
        "wired together with HorzLine, MultiHorzLine (with Length) and VertLine cells. "
        + _ELEMENTS
    ),
    FormatKind.JSON: (
        "You write PLC ladder logic as a graph. Answer with one JSON object mapping rung keys "
        "(G0, G1, ...) to objects of nodes; each node id maps to {\"attributes\": {ElementType, "
        "Name, ...}, \"edges\": [{\"target\": id, \"type\": Flow|Enable|Output|InputN}]}. "
        + _ELEMENTS
    ),
    FormatKind.METAPROGRAM: (
        "You write PLC ladder logic as a graph-building script. Answer only with "
        "G.add_node(id, ElementType=\"...\", Name=\"...\") and "
        "G.add_edge(src, dst, type=\"Flow|Enable|Output|InputN\") statements, one per line. "
        + _ELEMENTS
    ),
}

SYSTEM_MARK = "<|system|>"
USER_MARK = "<|user|>"
ASSISTANT_MARK = "<|assistant|>"
FINAL_TURN = "Write the ladder program for this request: "


def system_prompt(fmt) -> str:
    return SYSTEM_PROMPTS[FormatKind.parse(fmt)]


def build_augmented_input(query_prompt: str, retrieved, k: int, final_turn: str = FINAL_TURN) -> str:
    """Few-shot conversation text: retrieved (prompt, code) turns, then the query.

    Each turn is a role marker on its own line followed by the turn text;
    turns are separated by newlines. Only the first ``k`` retrieved pairs are used.
    ``final_turn`` is the instruction placed in front of the query prompt.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    turns = []
    for prompt, code in list(retrieved)[:k]:
        turns.append(f"{USER_MARK}\n{prompt}")
        turns.append(f"{ASSISTANT_MARK}\n{code.rstrip(chr(10))}")
    turns.append(f"{USER_MARK}\n{final_turn}{query_prompt}")
    return "\n".join(turns)
