"""Ladder Diagram programs as graphs: codecs, metrics, negative mining,
BM25 retrieval and retrieval-augmented dataset preparation."""

from __future__ import annotations

from .codecs import FormatKind, parse, render, strip_fences, try_parse
from .editops import (
    EditConfig,
    NegativeCandidate,
    PreferencePair,
    edit_graph,
    edit_graph_traced,
    generate_negatives,
    select_hard_negative,
)
from .errors import (
    DegeneratePairError,
    GraphValidationError,
    LadderError,
    LayoutError,
    ParseError,
    SchemaError,
    WiringError,
)
from .ged import GedCosts, GedResult, ged, levenshtein
from .graph import (
    LDEdge,
    LDGraph,
    LDNode,
    Violation,
    canonical_edge_string,
    canonical_node_string,
    check_valid,
    complexity,
    graph_equal,
    normalize_ids,
    validate,
)
from .metrics import EvalResult, EvalSummary, aggregate, evaluate
from .retrieval import Bm25Index, RankedHit, build_index, load_index, save_index, score, tokenize, top_k

__version__ = "0.1.0"

__all__ = [
    "Bm25Index", "DegeneratePairError", "EditConfig", "EvalResult", "EvalSummary", "FormatKind",
    "GedCosts", "GedResult", "GraphValidationError", "LDEdge", "LDGraph", "LDNode", "LadderError",
    "LayoutError", "NegativeCandidate", "ParseError", "PreferencePair", "RankedHit", "SchemaError",
    "Violation", "WiringError", "aggregate", "build_index", "canonical_edge_string",
    "canonical_node_string", "check_valid", "complexity", "edit_graph", "edit_graph_traced", "evaluate", "ged",
    "generate_negatives", "graph_equal", "levenshtein", "load_index", "normalize_ids", "parse",
    "render", "save_index", "score", "select_hard_negative", "strip_fences", "tokenize", "top_k",
    "try_parse", "validate",
]
