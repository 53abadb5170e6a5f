"""Node/Edge F1 and Node/Edge/Program exact match between two graphs."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Sequence

from .graph import LDGraph, edge_strings, node_strings

METRIC_NAMES = ("node_f1", "edge_f1", "node_em", "edge_em", "program_em")


def _f1(tp: int, fp: int, fn: int) -> Fraction:
    denom = 2 * tp + fp + fn
    if denom == 0:
        return Fraction(1)
    return Fraction(2 * tp, denom)


def _ratio(num: int, denom: int) -> float:
    return num / denom if denom else 1.0


@dataclass(frozen=True)
class EvalResult:
    node_tp: int
    node_fp: int
    node_fn: int
    edge_tp: int
    edge_fp: int
    edge_fn: int
    node_em: int
    edge_em: int
    program_em: int

    @property
    def node_f1(self) -> float:
        return float(_f1(self.node_tp, self.node_fp, self.node_fn))

    @property
    def edge_f1(self) -> float:
        return float(_f1(self.edge_tp, self.edge_fp, self.edge_fn))

    @property
    def node_precision(self) -> float:
        return _ratio(self.node_tp, self.node_tp + self.node_fp)

    @property
    def node_recall(self) -> float:
        return _ratio(self.node_tp, self.node_tp + self.node_fn)

    @property
    def edge_precision(self) -> float:
        return _ratio(self.edge_tp, self.edge_tp + self.edge_fp)

    @property
    def edge_recall(self) -> float:
        return _ratio(self.edge_tp, self.edge_tp + self.edge_fn)

    def exact(self, metric: str) -> Fraction:
        """Metric value as an exact fraction (used for table aggregation)."""
        if metric == "node_f1":
            return _f1(self.node_tp, self.node_fp, self.node_fn)
        if metric == "edge_f1":
            return _f1(self.edge_tp, self.edge_fp, self.edge_fn)
        return Fraction(getattr(self, metric))

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["node_f1"] = self.node_f1
        rec["edge_f1"] = self.edge_f1
        return rec

    @classmethod
    def zero(cls, gt: LDGraph) -> "EvalResult":
        """Score for a missing or unparseable prediction."""
        return cls(0, 0, len(gt.nodes), 0, 0, len(gt.edges), 0, 0, 0)


def evaluate(gt: LDGraph, pred: LDGraph) -> EvalResult:
    gt_nodes, pred_nodes = node_strings(gt), node_strings(pred)
    gt_edges, pred_edges = edge_strings(gt), edge_strings(pred)
    node_tp = sum((gt_nodes & pred_nodes).values())
    edge_tp = sum((gt_edges & pred_edges).values())
    node_em = int(gt_nodes == pred_nodes)
    edge_em = int(gt_edges == pred_edges)
    return EvalResult(
        node_tp=node_tp,
        node_fp=sum(pred_nodes.values()) - node_tp,
        node_fn=sum(gt_nodes.values()) - node_tp,
        edge_tp=edge_tp,
        edge_fp=sum(pred_edges.values()) - edge_tp,
        edge_fn=sum(gt_edges.values()) - edge_tp,
        node_em=node_em,
        edge_em=edge_em,
        program_em=node_em & edge_em,
    )


def round_half_up(value, places: int = 1) -> float:
    q = Decimal(1).scaleb(-places)
    if isinstance(value, Fraction):
        exact = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        exact = Decimal(str(value))
    return float(exact.quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class EvalSummary:
    """Per-metric means scaled to percent, one decimal, as in results tables."""

    n_samples: int
    node_f1: float
    edge_f1: float
    node_em: float
    edge_em: float
    program_em: float

    def to_record(self) -> dict:
        return asdict(self)


def aggregate(results: Sequence[EvalResult]) -> EvalSummary:
    if not results:
        raise ValueError("cannot aggregate an empty list of results")
    n = len(results)
    means = {m: round_half_up(sum(r.exact(m) for r in results) * 100 / n) for m in METRIC_NAMES}
    return EvalSummary(n_samples=n, **means)
