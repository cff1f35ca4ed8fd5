import json
from pathlib import Path

import pytest

from veridict.cli import main


def run(argv):
    return main([str(a) for a in argv])


class TestUsage:
    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            run(["frobnicate"])
        assert err.value.code == 2

    def test_no_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run([])
        assert err.value.code == 2

    def test_missing_corpus_is_runtime_error(self, tmp_path, capsys):
        assert run(["stats", "--out-dir", tmp_path]) == 1
        assert "error:" in capsys.readouterr().err


class TestStats:
    def test_prints_table_schema(self, corpus_root, tmp_path, capsys):
        assert run(["stats", "--corpus", corpus_root, "--out-dir", tmp_path,
                    "--csv", "stats.csv"]) == 0
        out = capsys.readouterr().out
        assert "avg doc words" in out
        assert "coverage" in out
        assert "train" in out and "test" in out
        csv_lines = (tmp_path / "stats.csv").read_text().splitlines()
        assert csv_lines[0].startswith("split,n_documents")
        assert len(csv_lines) == 3
        manifest = json.loads((tmp_path / "stats_manifest.json").read_text())
        assert manifest["command"] == "stats"
        assert "stats.csv" in manifest["outputs"]


class TestIngest:
    def test_writes_jsonl(self, corpus_root, tmp_path):
        assert run(["ingest", "--corpus", corpus_root, "--out-dir", tmp_path]) == 0
        lines = (tmp_path / "records.jsonl").read_text().splitlines()
        assert len(lines) == 10
        first = json.loads(lines[0])
        assert set(first) == {"id", "document", "summary", "split", "source"}


class TestPipeline:
    def _summarize(self, corpus_root, out_dir, variant="summ"):
        return run(["summarize", "--corpus", corpus_root, "--split", "test",
                    "--variant", variant, "--chunk-words", "64",
                    "--backend", "echo", "--out-dir", out_dir, "--jobs", "2"])

    def test_summarize_evaluate_audit_correct_report(self, corpus_root, tmp_path):
        assert self._summarize(corpus_root, tmp_path) == 0
        candidates = tmp_path / "candidates.jsonl"
        assert candidates.is_file()

        assert run(["evaluate", "--corpus", corpus_root, "--summaries",
                    candidates, "--nli", "mock", "--embedder", "builtin",
                    "--recognizer", "builtin", "--out-dir", tmp_path]) == 0
        report_csv = tmp_path / "report.csv"
        report_jsonl = tmp_path / "report.jsonl"
        assert report_csv.is_file() and report_jsonl.is_file()
        rows = report_csv.read_text().splitlines()
        assert len(rows) == 4  # header + 3 test pairs

        assert run(["audit", "--corpus", corpus_root, "--summaries", candidates,
                    "--out-dir", tmp_path]) == 0
        audit_payload = json.loads((tmp_path / "audit.json").read_text())
        assert len(audit_payload) == 3

        assert run(["correct", "--corpus", corpus_root, "--in", candidates,
                    "--embedder", "builtin", "--out-dir", tmp_path]) == 0
        assert (tmp_path / "corrected.jsonl").is_file()
        assert (tmp_path / "ledger.json").is_file()

        assert run(["report", "--reports", report_jsonl,
                    "--out-dir", tmp_path]) == 0
        assert (tmp_path / "comparison.csv").is_file()
        assert (tmp_path / "comparison.md").is_file()
        figures = sorted((tmp_path / "figures").glob("*.png"))
        assert figures, "report should render metric figures"

    def test_extract_subcommand(self, corpus_root, tmp_path):
        assert run(["extract", "--corpus", corpus_root, "--split", "test",
                    "--budget-words", "80", "--out-dir", tmp_path]) == 0
        lines = (tmp_path / "extractive.jsonl").read_text().splitlines()
        assert len(lines) == 3
        first = json.loads(lines[0])
        assert first["method_id"] == "case_summarizer"

    def test_report_compare_significance(self, corpus_root, tmp_path):
        assert self._summarize(corpus_root, tmp_path) == 0
        sub = tmp_path / "tldr"
        assert self._summarize(corpus_root, sub, variant="tldr") == 0
        merged = tmp_path / "all.jsonl"
        for src, dest in ((tmp_path, tmp_path), (sub, sub)):
            assert run(["evaluate", "--corpus", corpus_root,
                        "--summaries", src / "candidates.jsonl",
                        "--out-dir", dest]) == 0
        merged.write_text((tmp_path / "report.jsonl").read_text() +
                          (sub / "report.jsonl").read_text(), encoding="utf-8")
        assert run(["report", "--reports", merged, "--out-dir", tmp_path,
                    "--compare", "echo-summ-64", "echo-tldr-64",
                    "--metric", "r2_f1", "--no-figures"]) == 0
        sig = json.loads((tmp_path / "significance.json").read_text())
        assert set(sig) == {"metric", "a", "b", "t", "p", "significant"}

    def test_config_file_supplies_defaults(self, corpus_root, tmp_path):
        config = tmp_path / "run.ini"
        config.write_text(
            f"[run]\ncorpus_root = {corpus_root}\nchunk_words = 64\n"
            f"variant = summ\nbackend = echo\n", encoding="utf-8")
        assert run(["summarize", "--config", config, "--split", "test",
                    "--out-dir", tmp_path]) == 0
        lines = (tmp_path / "candidates.jsonl").read_text().splitlines()
        assert json.loads(lines[0])["method_id"] == "echo-summ-64"

    def test_manifest_records_config_and_hashes(self, corpus_root, tmp_path):
        assert self._summarize(corpus_root, tmp_path) == 0
        manifest = json.loads((tmp_path / "summarize_manifest.json").read_text())
        assert manifest["config"]["chunk_words"] == 64
        assert "candidates.jsonl" in manifest["outputs"]
        assert len(manifest["outputs"]["candidates.jsonl"]) == 64


class TestDeterminism:
    def test_summarize_evaluate_correct_byte_identical(self, corpus_root, tmp_path):
        outputs = {}
        for name in ("a", "b"):
            out = tmp_path / name
            out.mkdir()
            assert run(["summarize", "--corpus", corpus_root, "--split", "test",
                        "--variant", "summ", "--chunk-words", "64",
                        "--backend", "echo", "--out-dir", out, "--jobs", "4"]) == 0
            assert run(["evaluate", "--corpus", corpus_root,
                        "--summaries", out / "candidates.jsonl",
                        "--out-dir", out, "--jobs", "4"]) == 0
            assert run(["correct", "--corpus", corpus_root,
                        "--in", out / "candidates.jsonl",
                        "--out-dir", out]) == 0
            outputs[name] = {
                p.name: p.read_bytes()
                for p in sorted(out.iterdir()) if p.is_file()
            }
        assert outputs["a"].keys() == outputs["b"].keys()
        for name in outputs["a"]:
            assert outputs["a"][name] == outputs["b"][name], name
