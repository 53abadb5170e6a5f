"""Okapi BM25 over prompts, with a Hangul/CJK-aware tokenizer."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

_WORD_RE = re.compile(r"[^\W_]+")
_CJK_RE = re.compile(
    r"[\u1100-\u11ff\u3040-\u30ff\u3130-\u318f\u3400-\u4dbf\u4e00-\u9fff\uac00-\ud7a3\uf900-\ufaff]{2,}"
)

INDEX_FORMAT = "ladder-forge-bm25/1"


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace/punctuation, add bigrams for CJK runs.

    Every word becomes a token; each run of two or more Hangul/CJK/kana
    characters inside a word also contributes its overlapping character
    bigrams, right after the word (a two-character word is not repeated).
    """
    tokens = []
    for word in _WORD_RE.findall(text.lower()):
        tokens.append(word)
        for run in _CJK_RE.findall(word):
            if run != word or len(run) > 2:
                tokens.extend(run[i:i + 2] for i in range(len(run) - 1))
    return tokens


@dataclass(frozen=True)
class RankedHit:
    sample_id: str
    score: float


@dataclass(frozen=True)
class Bm25Index:
    doc_ids: tuple[str, ...]
    doc_tf: tuple[dict, ...]
    doc_len: tuple[int, ...]
    k1: float = 1.2
    b: float = 0.75
    df: dict = field(default_factory=dict, compare=False)
    _postings: dict = field(default_factory=dict, compare=False, repr=False)
    _position: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        df: Counter = Counter()
        postings: dict[str, list[tuple[int, int]]] = {}
        for i, tf in enumerate(self.doc_tf):
            for term, count in tf.items():
                df[term] += 1
                postings.setdefault(term, []).append((i, count))
        object.__setattr__(self, "df", dict(df))
        object.__setattr__(self, "_postings", postings)
        object.__setattr__(self, "_position", {d: i for i, d in enumerate(self.doc_ids)})

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    @property
    def avg_doc_len(self) -> float:
        return sum(self.doc_len) / len(self.doc_len) if self.doc_len else 0.0

    def idf(self, term: str) -> float:
        n, df = self.doc_count, self.df.get(term, 0)
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)

    def _term_weight(self, term: str, tf: int, length: int) -> float:
        norm = self.k1 * (1.0 - self.b + self.b * length / self.avg_doc_len) if self.avg_doc_len else self.k1
        return self.idf(term) * tf * (self.k1 + 1.0) / (tf + norm)

    def scores(self, query_tokens: Iterable[str]) -> list[float]:
        """Score of every document, in index order."""
        out = [0.0] * self.doc_count
        for term in sorted(set(query_tokens)):
            for i, tf in self._postings.get(term, ()):
                out[i] += self._term_weight(term, tf, self.doc_len[i])
        return out


def build_index(corpus: Sequence[tuple[str, str]], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    """Index ``(sample_id, prompt)`` pairs."""
    if not corpus:
        raise ValueError("cannot build an index over an empty corpus")
    ids = [str(i) for i, _ in corpus]
    dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
    if dupes:
        raise ValueError(f"duplicate sample ids in corpus: {dupes[:5]}")
    if k1 < 0 or not 0.0 <= b <= 1.0:
        raise ValueError(f"need k1 >= 0 and 0 <= b <= 1, got k1={k1}, b={b}")
    tfs, lens = [], []
    for _, prompt in corpus:
        tokens = tokenize(prompt)
        tfs.append(dict(sorted(Counter(tokens).items())))
        lens.append(len(tokens))
    return Bm25Index(tuple(ids), tuple(tfs), tuple(lens), float(k1), float(b))


def score(index: Bm25Index, query_tokens: Sequence[str], doc_id: str) -> float:
    """BM25 score of one document; each distinct query term counts once."""
    pos = index._position.get(doc_id)
    if pos is None:
        raise KeyError(f"unknown document id {doc_id!r}")
    tf = index.doc_tf[pos]
    return sum(
        index._term_weight(t, tf[t], index.doc_len[pos]) for t in sorted(set(query_tokens)) if t in tf
    )


def top_k(index: Bm25Index, query: str, k: int, exclude: str | None = None) -> list[RankedHit]:
    """Best ``k`` documents by (score desc, id asc), never returning ``exclude``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = index.scores(tokenize(query))
    ranked = sorted(
        (RankedHit(d, s) for d, s in zip(index.doc_ids, scores) if d != exclude),
        key=lambda h: (-h.score, h.sample_id),
    )
    return ranked[:k]


def save_index(index: Bm25Index, path) -> None:
    """Write the index as JSON lines: one header record, then one per document."""
    lines = [
        json.dumps(
            {"format": INDEX_FORMAT, "k1": index.k1, "b": index.b, "doc_count": index.doc_count},
            ensure_ascii=False,
        )
    ]
    for doc_id, tf, length in zip(index.doc_ids, index.doc_tf, index.doc_len):
        lines.append(json.dumps({"id": doc_id, "len": length, "tf": tf}, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index(path) -> Bm25Index:
    with open(path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records or records[0].get("format") != INDEX_FORMAT:
        raise ValueError(f"{path}: not a {INDEX_FORMAT} index file")
    head, docs = records[0], records[1:]
    if head.get("doc_count") != len(docs):
        raise ValueError(f"{path}: header says {head.get('doc_count')} documents, found {len(docs)}")
    for d in docs:
        if sum(d["tf"].values()) != d["len"]:
            raise ValueError(f"{path}: document {d['id']!r} term counts do not add up to its length")
    return Bm25Index(
        tuple(d["id"] for d in docs),
        tuple(dict(d["tf"]) for d in docs),
        tuple(int(d["len"]) for d in docs),
        float(head["k1"]),
        float(head["b"]),
    )
