from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from conftest import COMPARE_BLOCK_XML, GOLDEN, compare_block_graph
from ladder_forge.cli import run
from ladder_forge.codecs import parse, render
from ladder_forge.graph import graph_equal


def read_jsonl(path):
    return [json.loads(line) for line in open(path, encoding="utf-8")]


@pytest.fixture
def compare_block_xml(tmp_path):
    path = tmp_path / "compare_block.xml"
    path.write_text(COMPARE_BLOCK_XML, encoding="utf-8")
    return path


@pytest.fixture
def synth(tmp_path):
    def make(n=30, fmt="json", seed=0, name="corpus.jsonl", extra=()):
        path = tmp_path / name
        assert run(["synth", "-n", str(n), "--seed", str(seed), "--format", fmt, "-o", str(path), *extra]) == 0
        return path

    return make


class TestConvert:
    def test_xml_to_metaprogram_on_stdout(self, compare_block_xml, capsys):
        assert run(["convert", "--from", "xml", "--to", "metaprogram", str(compare_block_xml)]) == 0
        assert capsys.readouterr().out == GOLDEN.joinpath("compare_block.meta").read_text()

    def test_to_file_and_back(self, compare_block_xml, tmp_path):
        js = tmp_path / "compare_block.json"
        back = tmp_path / "back.xml"
        assert run(["convert", "--from", "xml", "--to", "json", str(compare_block_xml), "-o", str(js)]) == 0
        assert run(["convert", "--from", "json", "--to", "xml", str(js), "-o", str(back)]) == 0
        assert back.read_text() == COMPARE_BLOCK_XML

    def test_stdin(self, monkeypatch, capsys):
        import io

        monkeypatch.setattr(sys, "stdin", io.StringIO(render(compare_block_graph(), "json")))
        assert run(["convert", "--from", "json", "--to", "metaprogram"]) == 0
        assert graph_equal(parse(capsys.readouterr().out, "metaprogram"), compare_block_graph())

    def test_bad_content_is_a_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.xml"
        bad.write_text("<Program><Rung>")
        assert run(["convert", "--from", "xml", "--to", "json", str(bad)]) == 1
        assert "data error" in capsys.readouterr().err

    def test_lenient_flag(self, tmp_path):
        path = tmp_path / "x.xml"
        path.write_text(COMPARE_BLOCK_XML.replace('Name="X0010"', 'Name="X0010" Comment="start"'))
        assert run(["convert", "--from", "xml", "--to", "json", str(path)]) == 1
        assert run(["convert", "--from", "xml", "--to", "json", "--lenient", str(path)]) == 0

    def test_missing_file_is_usage_error(self, tmp_path):
        assert run(["convert", "--from", "xml", "--to", "json", str(tmp_path / "nope.xml")]) == 2


class TestUsage:
    def test_unknown_flag(self):
        assert run(["convert", "--from", "xml", "--to", "json", "--frobnicate", "x"]) == 2

    def test_unknown_command(self):
        assert run(["frobnicate"]) == 2

    def test_no_command(self):
        assert run([]) == 2

    def test_help(self, capsys):
        assert run(["--help"]) == 0
        out = capsys.readouterr().out
        for name in ["convert", "validate", "eval", "negatives", "hardneg", "index", "retrieve", "prepare-sft", "prepare-dpo", "split", "buckets", "synth"]:
            assert name in out

    def test_bad_format_choice(self, compare_block_xml):
        assert run(["validate", "--format", "yaml", str(compare_block_xml)]) == 2


class TestValidate:
    def test_valid(self, compare_block_xml, capsys):
        assert run(["validate", "--format", "xml", str(compare_block_xml)]) == 0
        assert json.loads(capsys.readouterr().out) == {"valid": True, "nodes": 5, "edges": 4}

    def test_cyclic_json_is_data_error(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"G0": {
            "0": {"attributes": {"ElementType": "NormallyOpen", "Name": "A"}, "edges": [{"target": "1", "type": "Flow"}]},
            "1": {"attributes": {"ElementType": "NormallyOpen", "Name": "B"}, "edges": [{"target": "0", "type": "Flow"}]},
        }}))
        assert run(["validate", "--format", "json", str(path)]) == 1


class TestNegatives:
    def test_candidates_and_sidecars(self, compare_block_xml, tmp_path):
        out = tmp_path / "neg"
        assert run(["negatives", "--format", "xml", "--num-seeds", "4", "--base-seed", "9", str(compare_block_xml), "--out-dir", str(out)]) == 0
        metas = sorted(out.glob("*.meta"))
        assert [p.name for p in metas] == [f"negative_{i:03d}.meta" for i in range(4)]
        for i, meta in enumerate(metas):
            g = parse(meta.read_text(), "metaprogram")
            assert len(g.nodes) == 6  # 5 nodes, duplication branch
            side = json.loads(meta.with_suffix(".json").read_text())
            assert side["seed"] == 9 + i and side["seed_index"] == i and side["tau"] == 0.1

    def test_env_seed(self, compare_block_xml, tmp_path, monkeypatch):
        monkeypatch.setenv("LADDER_FORGE_SEED", "40")
        out = tmp_path / "neg"
        assert run(["negatives", "--format", "xml", "--num-seeds", "1", str(compare_block_xml), "--out-dir", str(out)]) == 0
        assert json.loads((out / "negative_000.json").read_text())["seed"] == 40

    def test_bad_tau(self, compare_block_xml, tmp_path):
        assert run(["negatives", "--format", "xml", "--tau", "2", str(compare_block_xml), "--out-dir", str(tmp_path)]) == 2


class TestHardneg:
    def test_output(self, compare_block_xml, capsys):
        assert run(["hardneg", "--format", "xml", str(compare_block_xml)]) == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["provenance"]["ged"] > 0
        assert not graph_equal(parse(rec["rejected"], "xml"), compare_block_graph())


class TestRetrieval:
    def test_index_and_retrieve(self, synth, tmp_path, capsys):
        corpus = synth(20)
        index = tmp_path / "idx.jsonl"
        assert run(["index", "--format", "json", "--corpus", str(corpus), "-o", str(index)]) == 0
        first = read_jsonl(corpus)[3]
        query = first["program_description"] + "\n" + first["detailed_description"]
        assert run(["retrieve", "--index", str(index), "--query", query, "-k", "3"]) == 0
        hits = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert len(hits) == 3 and hits[0]["sample_id"] == first["id"]
        assert run(["retrieve", "--index", str(index), "--query", query, "-k", "1", "--exclude", first["id"]]) == 0
        assert json.loads(capsys.readouterr().out)["sample_id"] == hits[1]["sample_id"]

    def test_query_file(self, synth, tmp_path, capsys):
        corpus = synth(5)
        index = tmp_path / "idx.jsonl"
        run(["index", "--format", "json", "--corpus", str(corpus), "-o", str(index)])
        q = tmp_path / "q.txt"
        q.write_text("interlock")
        assert run(["retrieve", "--index", str(index), "--query-file", str(q), "-k", "2"]) == 0

    def test_k_zero_rejected(self, synth, tmp_path):
        corpus = synth(5)
        index = tmp_path / "idx.jsonl"
        run(["index", "--format", "json", "--corpus", str(corpus), "-o", str(index)])
        assert run(["retrieve", "--index", str(index), "--query", "x", "-k", "0"]) == 2

    def test_bad_index_file(self, tmp_path):
        path = tmp_path / "idx.jsonl"
        path.write_text('{"not": "an index"}\n')
        assert run(["retrieve", "--index", str(path), "--query", "x"]) == 1

    def test_bad_bm25_parameters(self, synth, tmp_path):
        assert run(["index", "--format", "json", "--corpus", str(synth(3)), "-o", str(tmp_path / "i"), "--b", "3"]) == 2


class TestDatasetCommands:
    def test_split_prepare_eval(self, synth, tmp_path, capsys):
        corpus = synth(40, fmt="metaprogram")
        sft, pref = tmp_path / "sft.jsonl", tmp_path / "pref.jsonl"
        assert run(["split", "--format", "metaprogram", "--corpus", str(corpus), "--fraction", "0.75", "--seed", "3",
                    "--sft-out", str(sft), "--pref-out", str(pref)]) == 0
        lines = corpus.read_text().splitlines()
        assert len(sft.read_text().splitlines()) == 30 and len(pref.read_text().splitlines()) == 10
        assert sorted(sft.read_text().splitlines() + pref.read_text().splitlines()) == sorted(lines)

        out_sft = tmp_path / "out_sft.jsonl"
        assert run(["prepare-sft", "--format", "metaprogram", "--corpus", str(sft), "-o", str(out_sft)]) == 0
        assert len(read_jsonl(out_sft)) == 30

        out_dpo = tmp_path / "out_dpo.jsonl"
        assert run(["prepare-dpo", "--format", "metaprogram", "--corpus", str(pref), "--pool", str(sft), "-o", str(out_dpo)]) == 0
        recs = read_jsonl(out_dpo)
        pool_ids = {json.loads(line)["id"] for line in sft.read_text().splitlines()}
        assert recs and all(set(r["retrieved"]) <= pool_ids for r in recs)

        preds = tmp_path / "pred.jsonl"
        preds.write_text("".join(json.dumps({"id": r["sample_id"], "code": r["rejected"]}) + "\n" for r in recs))
        report = tmp_path / "report.jsonl"
        capsys.readouterr()
        assert run(["eval", "--format", "metaprogram", "--gt", str(pref), "--pred", str(preds), "--report", str(report), "--buckets", "2"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["program_em"] == 0.0 and summary["n_samples"] == 10
        kinds = [r["kind"] for r in read_jsonl(report)]
        assert kinds.count("bucket") == 2 and kinds.count("summary") == 1

    def test_config_file_and_precedence(self, synth, tmp_path):
        corpus = synth(12)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"format": "json", "k": 2}))
        out = tmp_path / "sft.jsonl"
        assert run(["prepare-sft", "--config", str(cfg), "--corpus", str(corpus), "-o", str(out)]) == 0
        assert all(len(r["retrieved"]) == 2 for r in read_jsonl(out))
        assert run(["prepare-sft", "--config", str(cfg), "-k", "0", "--corpus", str(corpus), "-o", str(out)]) == 0
        assert all(r["retrieved"] == [] for r in read_jsonl(out))

    @pytest.mark.parametrize("cfg", [{"colour": 1}, {"k": "two"}, {"k": 1.5}, {"tau": True}, [1, 2]])
    def test_bad_config(self, synth, tmp_path, cfg):
        corpus = synth(3)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert run(["prepare-sft", "--format", "json", "--config", str(path), "--corpus", str(corpus), "-o", str(tmp_path / "o")]) == 2

    def test_missing_config(self, synth, tmp_path):
        assert run(["prepare-sft", "--format", "json", "--config", str(tmp_path / "none.json"), "--corpus", str(synth(3)), "-o", str(tmp_path / "o")]) == 2

    def test_negative_k(self, synth, tmp_path):
        assert run(["prepare-sft", "--format", "json", "-k", "-1", "--corpus", str(synth(3)), "-o", str(tmp_path / "o")]) == 2

    def test_bad_corpus_is_data_error(self, tmp_path, capsys):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "Q1", "program_description": "p", "detailed_description": "d", "code": "{"}\n5\n')
        assert run(["prepare-sft", "--format", "json", "--corpus", str(path), "-o", str(tmp_path / "o")]) == 1
        assert "Q1" in capsys.readouterr().err

    def test_split_lenient_skips_bad_lines(self, synth, tmp_path):
        corpus = synth(10)
        with open(corpus, "a") as fh:
            fh.write("garbage\n")
        args = ["split", "--format", "json", "--corpus", str(corpus), "--sft-out", str(tmp_path / "a"), "--pref-out", str(tmp_path / "b")]
        assert run(args) == 1
        assert run(args + ["--lenient"]) == 0
        assert len((tmp_path / "a").read_text().splitlines()) == 8

    def test_buckets(self, synth, capsys):
        corpus = synth(10)
        assert run(["buckets", "--format", "json", "--corpus", str(corpus), "-n", "5"]) == 0
        recs = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert [r["size"] for r in recs] == [2] * 5
        assert run(["buckets", "--format", "json", "--corpus", str(corpus), "-n", "11"]) == 2

    def test_prepare_dpo_workers(self, synth, tmp_path):
        corpus = synth(8)
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        base = ["prepare-dpo", "--format", "json", "--corpus", str(corpus), "--pool", str(corpus)]
        assert run(base + ["-o", str(a)]) == 0
        assert run(base + ["-o", str(b), "--workers", "2"]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert run(base + ["-o", str(b), "--workers", "0"]) == 2

    def test_synth_bad_params(self, tmp_path):
        assert run(["synth", "--min-nodes", "9", "--max-nodes", "3", "-o", str(tmp_path / "x")]) == 2

    def test_synth_is_deterministic(self, synth):
        assert synth(15, name="a.jsonl").read_bytes() == synth(15, name="b.jsonl").read_bytes()


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "ladder_forge", "--version"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and "ladder-forge" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "ladder_forge", "convert", "--bogus"], capture_output=True, text=True, env=env)
    assert proc.returncode == 2
