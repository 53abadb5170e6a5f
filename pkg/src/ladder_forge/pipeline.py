"""Dataset mechanics: corpus I/O, splitting, SFT/DPO records, buckets, evaluation.

All record files are JSON lines written in sample-id order with a fixed field
order, so identical inputs give byte-identical files. Schemas are in
docs/FORMATS.md.
"""

from __future__ import annotations

import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .codecs import FormatKind, parse, render, strip_fences, try_parse
from .errors import DegeneratePairError, LadderError
from .graph import LDGraph, complexity, graph_equal
from .metrics import EvalResult, EvalSummary, aggregate, evaluate
from .prompts import build_augmented_input, system_prompt
from .retrieval import Bm25Index, build_index, top_k


@dataclass(frozen=True)
class Sample:
    sample_id: str
    program_description: str
    detailed_description: str
    graph: LDGraph

    @property
    def prompt(self) -> str:
        return f"{self.program_description}\n{self.detailed_description}"


class CorpusError(LadderError):
    """One or more corpus records could not be loaded."""

    def __init__(self, problems: Sequence[tuple[str, str]]):
        self.problems = list(problems)
        shown = "; ".join(f"{sid}: {msg}" for sid, msg in self.problems[:5])
        more = f" (+{len(self.problems) - 5} more)" if len(self.problems) > 5 else ""
        super().__init__(f"{len(self.problems)} bad corpus record(s): {shown}{more}")


class RecordCheckError(LadderError):
    """An emitted record failed its self-check."""


# -- corpus files ---------------------------------------------------------------


def _jsonl(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def write_corpus(samples: Sequence[Sample], path, fmt) -> int:
    fmt = FormatKind.parse(fmt)
    lines = [
        _jsonl(
            {
                "id": s.sample_id,
                "program_description": s.program_description,
                "detailed_description": s.detailed_description,
                "format": fmt.value,
                "code": render(s.graph, fmt),
            }
        )
        for s in samples
    ]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


def load_corpus(path, fmt, lenient: bool = False, problems: list | None = None) -> list[Sample]:
    """Read a JSON-lines corpus; every record's code is parsed and validated.

    Bad records raise :class:`CorpusError` listing every offending id, unless
    ``lenient`` is set, in which case they are skipped (and appended to
    ``problems`` when given).
    """
    fmt = FormatKind.parse(fmt)
    samples, bad, seen = [], [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                bad.append((f"line {lineno}", f"malformed JSON: {exc.msg}"))
                continue
            if not isinstance(rec, dict):
                bad.append((f"line {lineno}", "record is not a JSON object"))
                continue
            sid = str(rec.get("id", f"line {lineno}"))
            missing = [k for k in ("id", "program_description", "detailed_description", "code") if k not in rec]
            if missing:
                bad.append((sid, f"missing field(s) {missing}"))
                continue
            wrong = [k for k in ("program_description", "detailed_description", "code") if not isinstance(rec[k], str)]
            if wrong:
                bad.append((sid, f"field(s) {wrong} must be strings"))
                continue
            if sid in seen:
                bad.append((sid, "duplicate sample id"))
                continue
            if rec.get("format", fmt.value) != fmt.value:
                bad.append((sid, f"record is {rec['format']!r}, expected {fmt.value!r}"))
                continue
            if not (rec["program_description"] + rec["detailed_description"]).strip():
                bad.append((sid, "empty prompt"))
                continue
            graph, err = try_parse(rec["code"], fmt)
            if err is not None:
                bad.append((sid, str(err)))
                continue
            seen.add(sid)
            samples.append(Sample(sid, rec["program_description"], rec["detailed_description"], graph))
    if bad:
        if problems is not None:
            problems.extend(bad)
        if not lenient:
            raise CorpusError(bad)
    return samples


# -- splitting & retrieval --------------------------------------------------------


def split_corpus(samples: Sequence[Sample], sft_fraction: float = 0.8, seed: int = 0):
    """Shuffle by ``seed``; the first floor(fraction * n) samples go to SFT."""
    if not 0.0 < sft_fraction < 1.0:
        raise ValueError(f"sft_fraction must lie strictly between 0 and 1, got {sft_fraction}")
    order = list(samples)
    random.Random(seed).shuffle(order)
    cut = math.floor(Fraction(repr(float(sft_fraction))) * len(order))
    return order[:cut], order[cut:]


def index_samples(samples: Sequence[Sample], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    return build_index([(s.sample_id, s.prompt) for s in samples], k1=k1, b=b)


class _Renderer:
    """Memoised rendering of pool samples."""

    def __init__(self, fmt: FormatKind):
        self.fmt = fmt
        self._cache: dict[str, str] = {}

    def __call__(self, sample: Sample) -> str:
        text = self._cache.get(sample.sample_id)
        if text is None:
            text = self._cache[sample.sample_id] = render(sample.graph, self.fmt)
        return text


def _augment(sample, index, pool, k, renderer, exclude):
    hits = top_k(index, sample.prompt, k, exclude=exclude) if k > 0 else []
    retrieved = [pool[h.sample_id] for h in hits]
    text = build_augmented_input(sample.prompt, [(r.prompt, renderer(r)) for r in retrieved], k)
    return text, [h.sample_id for h in hits]


def _check_round_trip(text: str, graph: LDGraph, fmt, sample_id: str, what: str) -> None:
    try:
        back = parse(text, fmt)
    except LadderError as exc:
        raise RecordCheckError(f"{sample_id}: {what} does not parse back: {exc}") from None
    if not graph_equal(back, graph):
        raise RecordCheckError(f"{sample_id}: {what} does not parse back to the source graph")


# -- SFT ---------------------------------------------------------------------------


def emit_sft_records(
    sft_set: Sequence[Sample],
    index: Bm25Index,
    fmt,
    k: int,
    out_path,
    pool: Mapping[str, Sample] | None = None,
) -> int:
    """One record per sample, with leave-one-out retrieval from ``pool``.

    ``pool`` maps indexed ids to samples and defaults to ``sft_set`` itself.
    """
    fmt = FormatKind.parse(fmt)
    pool = pool if pool is not None else {s.sample_id: s for s in sft_set}
    renderer = _Renderer(fmt)
    system = system_prompt(fmt)
    lines = []
    for sample in sorted(sft_set, key=lambda s: s.sample_id):
        text, retrieved = _augment(sample, index, pool, k, renderer, exclude=sample.sample_id)
        output = render(sample.graph, fmt)
        _check_round_trip(output, sample.graph, fmt, sample.sample_id, "output")
        lines.append(
            _jsonl(
                {
                    "sample_id": sample.sample_id,
                    "system": system,
                    "input": text,
                    "output": output,
                    "retrieved": retrieved,
                }
            )
        )
    Path(out_path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


# -- DPO ---------------------------------------------------------------------------


@dataclass
class DpoStats:
    written: int = 0
    skipped: list[str] = field(default_factory=list)


def _renderable(fmt: FormatKind):
    if fmt is not FormatKind.XML:
        return None

    def accept(graph: LDGraph) -> bool:
        try:
            render(graph, fmt)
        except LadderError:
            return False
        return True

    return accept


def mine_pair(graph: LDGraph, edit_config, fmt=FormatKind.JSON, exact_limit: int = 10, beam_width: int = 64):
    """Negatives for one graph plus the selected hard negative."""
    from .editops import generate_negatives, select_hard_negative

    fmt = FormatKind.parse(fmt)
    candidates = generate_negatives(graph, edit_config)
    return select_hard_negative(
        graph,
        candidates,
        tau=edit_config.tau,
        accept=_renderable(fmt),
        exact_limit=exact_limit,
        beam_width=beam_width,
    )


def _mine_or_none(args):
    try:
        return mine_pair(*args)
    except DegeneratePairError:
        return None


def emit_dpo_records(
    pref_set: Sequence[Sample],
    index: Bm25Index,
    pool: Mapping[str, Sample],
    fmt,
    k: int,
    edit_config,
    out_path,
    workers: int = 1,
) -> DpoStats:
    """Preference records: gt as ``chosen``, its hard negative as ``rejected``.

    Retrieval runs against ``index``/``pool`` (the SFT subset). Samples whose
    candidates are all identical to the gt (or unrenderable) are skipped.
    """
    fmt = FormatKind.parse(fmt)
    renderer = _Renderer(fmt)
    system = system_prompt(fmt)
    ordered = sorted(pref_set, key=lambda s: s.sample_id)
    jobs = [(s.graph, edit_config, fmt) for s in ordered]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            pairs = list(ex.map(_mine_or_none, jobs, chunksize=4))
    else:
        pairs = [_mine_or_none(j) for j in jobs]

    stats = DpoStats()
    lines = []
    for sample, pair in zip(ordered, pairs):
        if pair is None:
            stats.skipped.append(sample.sample_id)
            continue
        text, retrieved = _augment(sample, index, pool, k, renderer, exclude=sample.sample_id)
        chosen = render(pair.chosen, fmt)
        rejected = render(pair.rejected, fmt)
        _check_round_trip(chosen, sample.graph, fmt, sample.sample_id, "chosen")
        _check_round_trip(rejected, pair.rejected, fmt, sample.sample_id, "rejected")
        if chosen == rejected:
            raise RecordCheckError(f"{sample.sample_id}: chosen and rejected render identically")
        lines.append(
            _jsonl(
                {
                    "sample_id": sample.sample_id,
                    "system": system,
                    "input": text,
                    "chosen": chosen,
                    "rejected": rejected,
                    "provenance": pair.provenance,
                    "retrieved": retrieved,
                }
            )
        )
    Path(out_path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    stats.written = len(lines)
    return stats


# -- complexity buckets ------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexityBucket:
    label: int
    sample_ids: tuple[str, ...]
    min_complexity: int
    max_complexity: int

    def to_record(self) -> dict:
        return {
            "label": self.label,
            "size": len(self.sample_ids),
            "min_complexity": self.min_complexity,
            "max_complexity": self.max_complexity,
            "sample_ids": list(self.sample_ids),
        }


def bucket_by_complexity(samples: Sequence[Sample], n_buckets: int = 5) -> list[ComplexityBucket]:
    """Sort by (complexity, id) and cut into near-equal contiguous groups."""
    if n_buckets < 1:
        raise ValueError(f"n_buckets must be >= 1, got {n_buckets}")
    if len(samples) < n_buckets:
        raise ValueError(f"need at least {n_buckets} samples, got {len(samples)}")
    keyed = sorted((complexity(s.graph), s.sample_id) for s in samples)
    size, extra = divmod(len(keyed), n_buckets)
    buckets, start = [], 0
    for label in range(1, n_buckets + 1):
        end = start + size + (1 if label <= extra else 0)
        chunk = keyed[start:end]
        buckets.append(ComplexityBucket(label, tuple(sid for _, sid in chunk), chunk[0][0], chunk[-1][0]))
        start = end
    return buckets


# -- evaluation ------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleScore:
    sample_id: str
    status: str  # "ok" | "unparseable" | "missing"
    result: EvalResult
    error: str = ""

    def to_record(self) -> dict:
        rec = {"sample_id": self.sample_id, "status": self.status}
        rec.update(self.result.to_record())
        if self.error:
            rec["error"] = self.error
        return rec


@dataclass(frozen=True)
class EvaluationReport:
    samples: tuple[SampleScore, ...]
    summary: EvalSummary
    buckets: tuple[tuple[ComplexityBucket, EvalSummary], ...] = ()

    @property
    def n_unparseable(self) -> int:
        return sum(s.status == "unparseable" for s in self.samples)

    @property
    def n_missing(self) -> int:
        return sum(s.status == "missing" for s in self.samples)

    def records(self) -> list[dict]:
        """Report as records: one per sample, then the summary, then buckets."""
        out = [{"kind": "sample", **s.to_record()} for s in self.samples]
        out.append(
            {
                "kind": "summary",
                **self.summary.to_record(),
                "unparseable": self.n_unparseable,
                "missing": self.n_missing,
            }
        )
        for bucket, summary in self.buckets:
            rec = {k: v for k, v in bucket.to_record().items() if k != "sample_ids"}
            out.append({"kind": "bucket", **rec, **summary.to_record()})
        return out

    def write(self, path) -> None:
        Path(path).write_text("".join(_jsonl(r) + "\n" for r in self.records()), encoding="utf-8")


def read_predictions(path) -> dict[str, str]:
    """Prediction file: JSON lines with ``id`` (or ``sample_id``) and ``code``."""
    preds = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sid = str(rec["id"] if "id" in rec else rec["sample_id"])
                preds[sid] = rec["code"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError([(f"line {lineno}", f"bad prediction record: {exc}")]) from None
    return preds


def score_predictions(
    predictions: Mapping[str, str],
    gt_samples: Sequence[Sample],
    fmt,
    strip: bool = False,
    n_buckets: int | None = None,
) -> EvaluationReport:
    fmt = FormatKind.parse(fmt)
    rows = []
    for sample in sorted(gt_samples, key=lambda s: s.sample_id):
        text = predictions.get(sample.sample_id)
        if text is None:
            rows.append(SampleScore(sample.sample_id, "missing", EvalResult.zero(sample.graph)))
            continue
        graph, err = try_parse(strip_fences(text) if strip else text, fmt)
        if err is not None:
            rows.append(SampleScore(sample.sample_id, "unparseable", EvalResult.zero(sample.graph), str(err)))
        else:
            rows.append(SampleScore(sample.sample_id, "ok", evaluate(sample.graph, graph)))
    summary = aggregate([r.result for r in rows])
    per_bucket = ()
    if n_buckets:
        by_id = {r.sample_id: r.result for r in rows}
        per_bucket = tuple(
            (b, aggregate([by_id[sid] for sid in b.sample_ids])) for b in bucket_by_complexity(gt_samples, n_buckets)
        )
    return EvaluationReport(tuple(rows), summary, per_bucket)


def evaluate_predictions(pred_path, gt_samples, fmt, strip: bool = False, n_buckets: int | None = None):
    return score_predictions(read_predictions(pred_path), gt_samples, fmt, strip=strip, n_buckets=n_buckets)
