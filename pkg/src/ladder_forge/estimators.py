"""scikit-learn style wrappers around the codecs, negative mining and BM25.

These are thin adapters for people who already compose preprocessing with
``sklearn`` conventions (``get_params``/``set_params``, ``fit``/``transform``,
``check_is_fitted``). The functional API underneath is the source of truth.
"""

from __future__ import annotations

from typing import Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .codecs import FormatKind, parse, render
from .editops import EditConfig, generate_negatives, select_hard_negative
from .graph import LDGraph, check_valid
from .metrics import aggregate, evaluate
from .retrieval import build_index, top_k


def check_graphs(graphs) -> list[LDGraph]:
    """Accept a sequence of valid LDGraph objects; reject anything else early."""
    if isinstance(graphs, LDGraph):
        raise TypeError("expected a sequence of LDGraph objects, got a single graph")
    out = list(graphs)
    for i, g in enumerate(out):
        if not isinstance(g, LDGraph):
            raise TypeError(f"item {i} is {type(g).__name__}, expected LDGraph")
        check_valid(g)
    return out


def check_texts(texts) -> list[str]:
    if isinstance(texts, str):
        raise TypeError("expected a sequence of strings, got a single string")
    out = list(texts)
    for i, t in enumerate(out):
        if not isinstance(t, str):
            raise TypeError(f"item {i} is {type(t).__name__}, expected str")
    return out


class GraphCodec(TransformerMixin, BaseEstimator):
    """``transform`` parses texts into graphs; ``inverse_transform`` renders them."""

    def __init__(self, fmt: str = "json", lenient: bool = False):
        self.fmt = fmt
        self.lenient = lenient

    def fit(self, X=None, y=None):
        self.format_ = FormatKind.parse(self.fmt)
        return self

    def transform(self, X) -> list[LDGraph]:
        check_is_fitted(self, "format_")
        return [parse(t, self.format_, lenient=self.lenient) for t in check_texts(X)]

    def inverse_transform(self, X) -> list[str]:
        check_is_fitted(self, "format_")
        return [render(g, self.format_) for g in check_graphs(X)]


class HardNegativeMiner(TransformerMixin, BaseEstimator):
    """Map each ground-truth graph to its preference pair (gt, hard negative)."""

    def __init__(self, tau: float = 0.1, num_seeds: int = 10, base_seed: int = 0, exact_limit: int = 10, beam_width: int = 64):
        self.tau = tau
        self.num_seeds = num_seeds
        self.base_seed = base_seed
        self.exact_limit = exact_limit
        self.beam_width = beam_width

    def fit(self, X=None, y=None):
        self.config_ = EditConfig(self.tau, self.num_seeds, self.base_seed)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        return [
            select_hard_negative(
                g,
                generate_negatives(g, self.config_),
                tau=self.tau,
                exact_limit=self.exact_limit,
                beam_width=self.beam_width,
            )
            for g in check_graphs(X)
        ]


class Bm25Retriever(BaseEstimator):
    """Fit on prompts (optionally with ids); ``predict`` returns top-k hit lists."""

    def __init__(self, k: int = 1, k1: float = 1.2, b: float = 0.75):
        self.k = k
        self.k1 = k1
        self.b = b

    def fit(self, X, y=None):
        prompts = check_texts(X)
        ids = [str(i) for i in (y if y is not None else range(len(prompts)))]
        if len(ids) != len(prompts):
            raise ValueError(f"got {len(prompts)} prompts but {len(ids)} ids")
        self.index_ = build_index(list(zip(ids, prompts)), k1=self.k1, b=self.b)
        return self

    def predict(self, X, exclude: Sequence[str] | None = None):
        check_is_fitted(self, "index_")
        queries = check_texts(X)
        excl = list(exclude) if exclude is not None else [None] * len(queries)
        return [top_k(self.index_, q, self.k, exclude=e) for q, e in zip(queries, excl)]


class GraphScorer(BaseEstimator):
    """``score(gt, pred)`` returns the aggregated metric table row as a dict."""

    def score(self, X, y) -> dict:
        gts, preds = check_graphs(X), check_graphs(y)
        if len(gts) != len(preds):
            raise ValueError(f"{len(gts)} ground-truth graphs but {len(preds)} predictions")
        return aggregate([evaluate(a, b) for a, b in zip(gts, preds)]).to_record()
