"""``ladder-forge`` command line.

Exit codes: 0 success, 1 data error (bad input content), 2 usage error (bad
flags, missing files, bad config). Progress goes to stderr; machine-readable
output goes to stdout or the declared output paths only.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .codecs import FormatKind, parse, render
from .editops import EditConfig, generate_negatives
from .errors import LadderError
from .graph import validate
from .pipeline import (
    bucket_by_complexity,
    emit_dpo_records,
    emit_sft_records,
    evaluate_predictions,
    index_samples,
    load_corpus,
    mine_pair,
    split_corpus,
    write_corpus,
)
from .retrieval import load_index, save_index, top_k
from .synthgen import SynthParams, generate_corpus

log = logging.getLogger("ladder_forge")

SEED_ENV = "LADDER_FORGE_SEED"
CONFIG_KEYS = {"tau", "num_seeds", "base_seed", "k", "k1", "b", "format", "sft_fraction", "workers"}
DEFAULTS = {
    "tau": 0.1,
    "num_seeds": 10,
    "base_seed": 0,
    "k": 1,
    "k1": 1.2,
    "b": 0.75,
    "format": "xml",
    "sft_fraction": 0.8,
    "workers": 1,
}
_TYPES = {"tau": float, "num_seeds": int, "base_seed": int, "k": int, "k1": float, "b": float,
          "format": str, "sft_fraction": float, "workers": int}
FORMATS = [f.value for f in FormatKind]


class UsageError(Exception):
    pass


# -- option resolution -----------------------------------------------------------


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s) {unknown}; allowed: {sorted(CONFIG_KEYS)}")
    for key, value in data.items():
        kind = _TYPES[key]
        ok = isinstance(value, str) if kind is str else (
            isinstance(value, (int, float)) and not isinstance(value, bool) and (kind is float or float(value).is_integer())
        )
        if not ok:
            raise UsageError(f"config key {key!r} must be {kind.__name__}, got {value!r}")
        data[key] = kind(value)
    return data


def _option(args, name):
    """Flag value, else config file value, else env (base_seed only), else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in args.config_values:
        return args.config_values[name]
    if name == "base_seed" and os.environ.get(SEED_ENV):
        try:
            return int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {os.environ[SEED_ENV]!r}") from None
    return DEFAULTS[name]


def _format(args, name="format") -> FormatKind:
    try:
        return FormatKind.parse(_option(args, name) if name == "format" else getattr(args, name))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _edit_config(args) -> EditConfig:
    try:
        return EditConfig(float(_option(args, "tau")), int(_option(args, "num_seeds")), int(_option(args, "base_seed")))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _bm25(args) -> dict:
    k1, b = float(_option(args, "k1")), float(_option(args, "b"))
    if k1 < 0 or not 0.0 <= b <= 1.0:
        raise UsageError(f"need k1 >= 0 and 0 <= b <= 1, got k1={k1}, b={b}")
    return {"k1": k1, "b": b}


def _k(args, minimum: int = 0) -> int:
    k = int(_option(args, "k"))
    if k < minimum:
        raise UsageError(f"-k must be >= {minimum}, got {k}")
    return k


def _workers(args) -> int:
    workers = int(_option(args, "workers"))
    if workers < 1:
        raise UsageError(f"--workers must be >= 1, got {workers}")
    return workers


def _existing(path, what="input file"):
    if path in (None, "-"):
        return path
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return path


def _read_text(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(_existing(path)).read_text(encoding="utf-8")


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _json_line(obj) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


# -- subcommands ----------------------------------------------------------------------


def cmd_convert(args):
    src, dst = _format(args, "from_format"), _format(args, "to_format")
    graph = parse(_read_text(args.input), src, lenient=args.lenient)
    text = render(graph, dst)
    _write_text(args.output, text if text.endswith("\n") else text + "\n")
    return 0


def cmd_validate(args):
    fmt = _format(args)
    graph = parse(_read_text(args.input), fmt, lenient=args.lenient)
    report = validate(graph)
    for v in report:
        print(str(v))
    print(_json_line({"valid": not report, "nodes": len(graph.nodes), "edges": len(graph.edges)}), end="")
    return 1 if report else 0


def cmd_eval(args):
    fmt = _format(args)
    _existing(args.pred, "prediction file")
    gt = load_corpus(_existing(args.gt, "ground-truth corpus"), fmt, lenient=args.lenient)
    report = evaluate_predictions(args.pred, gt, fmt, strip=args.strip_fences, n_buckets=args.buckets or None)
    if args.report:
        report.write(args.report)
    log.info("%d samples, %d unparseable, %d missing", len(report.samples), report.n_unparseable, report.n_missing)
    flagged = [s.sample_id for s in report.samples if s.status != "ok"]
    if flagged:
        log.info("zero-scored samples: %s", ", ".join(flagged[:20]) + (" ..." if len(flagged) > 20 else ""))
    print(_json_line(report.summary.to_record()), end="")
    return 0


def cmd_negatives(args):
    fmt = _format(args)
    config = _edit_config(args)
    graph = parse(_read_text(args.input), fmt, lenient=args.lenient)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for cand in generate_negatives(graph, config):
        stem = out / f"negative_{cand.seed_index:03d}"
        stem.with_suffix(".meta").write_text(render(cand.graph, FormatKind.METAPROGRAM), encoding="utf-8")
        sidecar = {"seed_index": cand.seed_index, "seed": cand.seed_value, "tau": config.tau, "source": str(args.input)}
        stem.with_suffix(".json").write_text(_json_line(sidecar), encoding="utf-8")
    log.info("wrote %d candidates to %s", config.num_seeds, out)
    return 0


def cmd_hardneg(args):
    fmt = _format(args)
    config = _edit_config(args)
    graph = parse(_read_text(args.input), fmt, lenient=args.lenient)
    pair = mine_pair(graph, config, fmt)
    print(_json_line({"provenance": pair.provenance, "rejected": render(pair.rejected, fmt)}), end="")
    return 0


def cmd_index(args):
    fmt = _format(args)
    samples = load_corpus(_existing(args.corpus, "corpus"), fmt, lenient=args.lenient)
    index = index_samples(samples, **_bm25(args))
    save_index(index, args.output)
    log.info("indexed %d documents", index.doc_count)
    return 0


def cmd_retrieve(args):
    try:
        index = load_index(_existing(args.index, "index file"))
    except (ValueError, KeyError) as exc:
        raise LadderError(f"bad index file: {exc}") from None
    query = args.query if args.query is not None else _read_text(args.query_file)
    for hit in top_k(index, query, _k(args, 1), exclude=args.exclude):
        print(_json_line({"sample_id": hit.sample_id, "score": hit.score}), end="")
    return 0


def cmd_prepare_sft(args):
    fmt = _format(args)
    samples = load_corpus(_existing(args.corpus, "corpus"), fmt, lenient=args.lenient)
    index = index_samples(samples, **_bm25(args))
    n = emit_sft_records(samples, index, fmt, _k(args), args.output)
    log.info("wrote %d SFT records to %s", n, args.output)
    return 0


def cmd_prepare_dpo(args):
    fmt = _format(args)
    pool = load_corpus(_existing(args.pool, "retrieval pool corpus"), fmt, lenient=args.lenient)
    pref = load_corpus(_existing(args.corpus, "corpus"), fmt, lenient=args.lenient)
    index = index_samples(pool, **_bm25(args))
    stats = emit_dpo_records(
        pref,
        index,
        {s.sample_id: s for s in pool},
        fmt,
        _k(args),
        _edit_config(args),
        args.output,
        workers=_workers(args),
    )
    log.info("wrote %d DPO records to %s; skipped %d", stats.written, args.output, len(stats.skipped))
    if stats.skipped:
        log.info("skipped (no usable negative): %s", ", ".join(stats.skipped))
    return 0


def cmd_split(args):
    fmt = _format(args)
    path = _existing(args.corpus, "corpus")
    fraction = float(_option(args, "sft_fraction"))
    if not 0.0 < fraction < 1.0:
        raise UsageError(f"--fraction must lie strictly between 0 and 1, got {fraction}")
    samples = load_corpus(path, fmt, lenient=args.lenient)
    sft, pref = split_corpus(samples, fraction, int(_option(args, "base_seed")))
    # copy the original lines so the subsets keep the source bytes
    raw = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            continue  # only reachable with --lenient; load_corpus already reported it
        if isinstance(rec, dict):
            raw.setdefault(str(rec.get("id")), line)
    for subset, out in ((sft, args.sft_out), (pref, args.pref_out)):
        Path(out).write_text("".join(raw[s.sample_id] + "\n" for s in subset), encoding="utf-8")
    log.info("split %d samples into %d (sft) / %d (pref)", len(samples), len(sft), len(pref))
    return 0


def cmd_buckets(args):
    fmt = _format(args)
    samples = load_corpus(_existing(args.corpus, "corpus"), fmt, lenient=args.lenient)
    if args.n_buckets < 1 or len(samples) < args.n_buckets:
        raise UsageError(f"need 1 <= --n-buckets <= number of samples ({len(samples)})")
    text = "".join(_json_line(b.to_record()) for b in bucket_by_complexity(samples, args.n_buckets))
    _write_text(args.output, text)
    return 0


def cmd_synth(args):
    fmt = _format(args)
    try:
        params = SynthParams(
            n_samples=args.n,
            min_nodes=args.min_nodes,
            max_nodes=args.max_nodes,
            branch_prob=args.branch_prob,
            fb_prob=args.fb_prob,
            seed=int(_option(args, "base_seed")) if args.seed is None else args.seed,
            max_rungs=args.max_rungs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    n = write_corpus(generate_corpus(params), args.output, fmt)
    log.info("wrote %d synthetic samples to %s", n, args.output)
    return 0


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default option values")
    common.add_argument("--lenient", action="store_true", help="skip bad corpus records / unknown XML attributes")
    common.add_argument("-v", "--verbose", action="store_true", help="more progress output on stderr")

    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=FORMATS, help="code format (default xml)")

    edit = argparse.ArgumentParser(add_help=False)
    edit.add_argument("--tau", type=float, help="node deletion ratio (default 0.1)")
    edit.add_argument("--num-seeds", type=int, help="negative candidates per graph (default 10)")
    edit.add_argument("--base-seed", type=int, help=f"first edit seed (default ${SEED_ENV} or 0)")

    bm25 = argparse.ArgumentParser(add_help=False)
    bm25.add_argument("--k1", type=float, help="BM25 k1 (default 1.2)")
    bm25.add_argument("--b", type=float, help="BM25 b (default 0.75)")
    bm25.add_argument("-k", "--k", type=int, help="retrieved examples per record (default 1)")

    parser = argparse.ArgumentParser(prog="ladder-forge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("convert", parents=[common], help="convert a program between formats")
    p.add_argument("--from", dest="from_format", required=True, choices=FORMATS)
    p.add_argument("--to", dest="to_format", required=True, choices=FORMATS)
    p.add_argument("input", nargs="?", default="-", help="input file (default stdin)")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", parents=[common, fmt], help="parse a program and list invariant violations")
    p.add_argument("input", nargs="?", default="-")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", parents=[common, fmt], help="score predictions against a ground-truth corpus")
    p.add_argument("--gt", required=True, help="ground-truth corpus (JSON lines)")
    p.add_argument("--pred", required=True, help="predictions (JSON lines with id and code)")
    p.add_argument("--report", help="write the full JSON report here")
    p.add_argument("--strip-fences", action="store_true", help="drop Markdown code fences around predictions")
    p.add_argument("--buckets", type=int, default=0, help="also report N complexity buckets")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("negatives", parents=[common, fmt, edit], help="write edited negative candidates")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_negatives)

    p = sub.add_parser("hardneg", parents=[common, fmt, edit], help="select the hard negative of one program")
    p.add_argument("input")
    p.set_defaults(func=cmd_hardneg)

    p = sub.add_parser("index", parents=[common, fmt, bm25], help="build a BM25 index over corpus prompts")
    p.add_argument("--corpus", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("retrieve", parents=[common, bm25], help="query a BM25 index")
    p.add_argument("--index", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--query")
    group.add_argument("--query-file")
    p.add_argument("--exclude", help="sample id to leave out")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("prepare-sft", parents=[common, fmt, bm25], help="emit retrieval-augmented SFT records")
    p.add_argument("--corpus", required=True, help="SFT subset (also the retrieval pool)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_prepare_sft)

    p = sub.add_parser("prepare-dpo", parents=[common, fmt, bm25, edit], help="emit preference records")
    p.add_argument("--corpus", required=True, help="preference subset")
    p.add_argument("--pool", required=True, help="retrieval pool (the SFT subset)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--workers", type=int, help="processes for negative mining (default 1)")
    p.set_defaults(func=cmd_prepare_dpo)

    p = sub.add_parser("split", parents=[common, fmt], help="shuffle-split a corpus into SFT/preference subsets")
    p.add_argument("--corpus", required=True)
    p.add_argument("--fraction", dest="sft_fraction", type=float, help="SFT share (default 0.8)")
    p.add_argument("--seed", dest="base_seed", type=int, help=f"shuffle seed (default ${SEED_ENV} or 0)")
    p.add_argument("--sft-out", required=True)
    p.add_argument("--pref-out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("buckets", parents=[common, fmt], help="complexity buckets of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("-n", "--n-buckets", type=int, default=5)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_buckets)

    p = sub.add_parser("synth", parents=[common, fmt], help="generate a synthetic corpus")
    p.add_argument("-n", type=int, default=100, help="number of samples")
    p.add_argument("--seed", type=int, help=f"generator seed (default ${SEED_ENV} or 0)")
    p.add_argument("--min-nodes", type=int, default=3)
    p.add_argument("--max-nodes", type=int, default=20)
    p.add_argument("--branch-prob", type=float, default=0.3)
    p.add_argument("--fb-prob", type=float, default=0.25)
    p.add_argument("--max-rungs", type=int, default=3)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="ladder-forge: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        args.config_values = _load_config(args.config)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ladder-forge: error: {exc}", file=sys.stderr)
        return 2
    except LadderError as exc:
        print(f"ladder-forge: data error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ladder-forge: I/O error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
