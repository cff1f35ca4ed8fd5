"""Command-line entry point.

Subcommands: ingest, stats, extract, summarize, evaluate, audit, correct,
report. Options may come from a sectioned key-value config file (--config)
and are overridden by flags. Every run writes a manifest with the resolved
configuration and content hashes of its inputs and outputs. Exit codes:
0 success, 1 runtime error, 2 usage error.
"""

import argparse
import configparser
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import corrector, corpus, evalreport, extractive, metrics, orchestrator
from .backends import CharNgramEmbedder, SidecarEmbedder, SidecarNLI, VerbatimNLI
from .errors import VeridictError
from .recognizers import BuiltinRecognizer, RemoteRecognizer

VARIANT_ALIASES = {
    "summ": "summ",
    "tldr": "tldr",
    "explicit": "explicit",
    "hybrid": "hybrid",
    "rh": "reduce_hallucination",
}


@dataclass
class RunConfig:
    corpus_root: str = ""
    source: str = "generic"
    backend: str = "echo"
    base_url: str = ""
    model: str = ""
    chunk_words: int = 1024
    min_target_words: int = 30
    variant: str = "summ"
    recognizer: str = "builtin"
    embedder: str = "builtin"
    nli: str = "mock"
    sidecar_url: str = ""
    out_dir: str = "."
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)

    def as_dict(self) -> dict:
        return dict(sorted(self.__dict__.items()))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict,
                    inputs: list, outputs: list) -> Path:
    # out_dir is where the manifest itself lives; record it relatively so
    # identical runs into different directories stay byte-identical.
    config = dict(config, out_dir=".")
    manifest = {
        "command": command,
        "config": {k: v for k, v in sorted(config.items())},
        "inputs": {Path(p).name: _sha256(Path(p)) for p in inputs if Path(p).is_file()},
        "outputs": {Path(p).name: _sha256(Path(p)) for p in outputs if Path(p).is_file()},
    }
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _load_config(path: str | None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    if path:
        if not Path(path).is_file():
            raise VeridictError(f"config file not found: {path}")
        parser.read(path)
    return parser


def _merge(args, parser: configparser.ConfigParser) -> RunConfig:
    """Config file values fill in anything the flags left at None."""
    cfg = RunConfig()
    section = parser["run"] if parser.has_section("run") else {}

    def pick(flag_value, key, cast=str):
        if flag_value is not None:
            return flag_value
        if key in section:
            return cast(section[key])
        return None

    for key, cast in (("corpus_root", str), ("source", str), ("backend", str),
                      ("base_url", str), ("model", str), ("chunk_words", int),
                      ("min_target_words", int), ("variant", str),
                      ("recognizer", str), ("embedder", str), ("nli", str),
                      ("sidecar_url", str), ("out_dir", str), ("jobs", int)):
        value = pick(getattr(args, key, None), key, cast)
        if value is not None:
            setattr(cfg, key, value)
    if parser.has_section("backends") and cfg.backend in parser["backends"]:
        cfg.base_url = cfg.base_url or parser["backends"][cfg.backend]
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_records(cfg: RunConfig, split: str | None = None):
    if not cfg.corpus_root:
        raise VeridictError("no corpus root given (--corpus or config)")
    records = corpus.load_corpus(cfg.corpus_root, source=cfg.source)
    if split:
        records = [r for r in records if r.split == split]
    return sorted(records, key=lambda r: r.id)


def _recognizer(cfg: RunConfig):
    if cfg.recognizer == "builtin":
        return BuiltinRecognizer()
    if cfg.recognizer == "sidecar":
        if not cfg.sidecar_url:
            raise VeridictError("--sidecar-url required for the sidecar recognizer")
        return RemoteRecognizer(cfg.sidecar_url)
    raise VeridictError(f"unknown recognizer {cfg.recognizer!r}")


def _embedder(cfg: RunConfig):
    if cfg.embedder == "builtin":
        return CharNgramEmbedder()
    if cfg.embedder == "sidecar":
        if not cfg.sidecar_url:
            raise VeridictError("--sidecar-url required for the sidecar embedder")
        return SidecarEmbedder(cfg.sidecar_url)
    raise VeridictError(f"unknown embedder {cfg.embedder!r}")


def _nli(cfg: RunConfig):
    if cfg.nli == "mock":
        return VerbatimNLI()
    if cfg.nli == "sidecar":
        if not cfg.sidecar_url:
            raise VeridictError("--sidecar-url required for the sidecar NLI")
        return SidecarNLI(cfg.sidecar_url)
    raise VeridictError(f"unknown NLI backend {cfg.nli!r}")


def _backend(cfg: RunConfig):
    if cfg.backend == "echo":
        return orchestrator.EchoBackend()
    base_url = cfg.base_url
    if not base_url:
        raise VeridictError(
            f"backend {cfg.backend!r} needs --base-url or a [backends] entry")
    return orchestrator.ChatCompletionsBackend(base_url, cfg.model or cfg.backend)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    records = _load_records(cfg)
    target = out / args.out
    corpus.write_records_jsonl(records, target)
    print(f"wrote {len(records)} records to {target}")
    _write_manifest(out, "ingest", cfg.as_dict(), [], [target])
    return 0


def cmd_stats(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    records = _load_records(cfg)
    rows = []
    for split in corpus.SPLITS:
        split_records = [r for r in records if r.split == split]
        if not split_records:
            continue
        st = corpus.compute_stats(split_records)
        rows.append((split, st))
    if not rows:
        raise VeridictError("corpus contains no records")
    header = (f"{'split':<12}{'documents':>10}{'avg doc words':>15}"
              f"{'avg summary words':>19}{'coverage':>10}{'density':>9}")
    print(header)
    for split, st in rows:
        print(f"{split:<12}{st.n_documents:>10}{st.avg_doc_words:>15.2f}"
              f"{st.avg_summary_words:>19.2f}{st.coverage:>10.3f}{st.density:>9.3f}")
    outputs = []
    if args.csv:
        target = out / args.csv
        with open(target, "w", encoding="utf-8") as fh:
            fh.write("split,n_documents,avg_doc_words,avg_summary_words,"
                     "coverage,density\n")
            for split, st in rows:
                fh.write(f"{split},{st.n_documents},{st.avg_doc_words:.6f},"
                         f"{st.avg_summary_words:.6f},{st.coverage:.6f},"
                         f"{st.density:.6f}\n")
        outputs.append(target)
    _write_manifest(out, "stats", cfg.as_dict(), [], outputs)
    return 0


def cmd_extract(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    records = _load_records(cfg, split=args.split)
    if not records:
        raise VeridictError("no records in the requested split")
    table = extractive.TfidfTable.build([r.document_text for r in records])
    boost = extractive.BoostConfig.from_config(parser)
    candidates = []
    for rec in records:
        summary = extractive.case_summarizer(rec.document_text, args.budget_words,
                                             table=table, config=boost)
        candidates.append(orchestrator.CandidateSummary(
            pair_id=rec.id,
            method_id="case_summarizer",
            text=summary.text,
            chunk_targets=(args.budget_words,),
            backend_metadata={"selected": list(summary.sentence_indices)},
        ))
    target = out / args.out
    orchestrator.write_candidates_jsonl(candidates, target)
    print(f"wrote {len(candidates)} extractive summaries to {target}")
    _write_manifest(out, "extract", cfg.as_dict(), [], [target])
    return 0


def cmd_summarize(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    records = _load_records(cfg, split=args.split)
    if not records:
        raise VeridictError("no records in the requested split")
    backend = _backend(cfg)
    kind = VARIANT_ALIASES.get(cfg.variant)
    if kind is None:
        raise VeridictError(f"unknown variant {cfg.variant!r}")
    table = None
    if kind == "hybrid":
        table = extractive.TfidfTable.build([r.document_text for r in records])
        boost = extractive.BoostConfig.from_config(parser)

    def summarize(rec):
        if kind == "hybrid":
            return orchestrator.hybrid_summarize(rec, backend, table=table,
                                                 boost_config=boost)
        variant = orchestrator.PromptVariant.default(kind)
        return orchestrator.summarize_document(
            rec, variant, cfg.chunk_words, backend,
            min_target_words=cfg.min_target_words)

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        candidates = list(pool.map(summarize, records))
    candidates.sort(key=lambda c: c.pair_id)
    target = out / args.out
    orchestrator.write_candidates_jsonl(candidates, target)
    print(f"wrote {len(candidates)} summaries to {target}")
    _write_manifest(out, "summarize", cfg.as_dict(), [], [target])
    return 0


def _records_by_id(records):
    return {r.id: r for r in records}


def cmd_evaluate(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    candidates = orchestrator.read_candidates_jsonl(args.summaries)
    by_id = _records_by_id(_load_records(cfg))
    missing = sorted({c.pair_id for c in candidates} - set(by_id))
    if missing:
        raise VeridictError(f"summaries reference unknown pairs: {', '.join(missing)}")
    recognizer = _recognizer(cfg)
    embedder = _embedder(cfg)
    nli = _nli(cfg)
    ordered = sorted(candidates, key=lambda c: (c.pair_id, c.method_id))

    def evaluate(cand):
        return metrics.compute_report(by_id[cand.pair_id], cand,
                                      recognizer=recognizer, embedder=embedder,
                                      nli=nli, which=args.metrics)

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        reports = list(pool.map(evaluate, ordered))
    csv_path = out / args.out
    jsonl_path = csv_path.with_suffix(".jsonl")
    metrics.write_reports_csv(reports, csv_path)
    metrics.write_reports_jsonl(reports, jsonl_path)
    print(f"wrote {len(reports)} metric reports to {csv_path} and {jsonl_path}")
    _write_manifest(out, "evaluate", cfg.as_dict(), [args.summaries],
                    [csv_path, jsonl_path])
    return 0


def cmd_audit(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    candidates = orchestrator.read_candidates_jsonl(args.summaries)
    by_id = _records_by_id(_load_records(cfg))
    recognizer = _recognizer(cfg)
    nli = _nli(cfg)
    payload = []
    for cand in sorted(candidates, key=lambda c: (c.pair_id, c.method_id)):
        rec = by_id.get(cand.pair_id)
        if rec is None:
            raise VeridictError(f"summary references unknown pair {cand.pair_id!r}")
        report = metrics.audit(rec.document_text, cand.text,
                               recognizer=recognizer, nli=nli,
                               nli_threshold=args.threshold,
                               pair_id=cand.pair_id, method_id=cand.method_id)
        payload.append({
            "pair_id": report.pair_id,
            "method_id": report.method_id,
            "flagged_sentences": [
                {"index": i, "nli_score": round(s, 9)}
                for i, s in report.flagged_sentences
            ],
            "unmatched_entities": [m.surface for m in report.unmatched_entities],
            "unmatched_numbers": [m.surface for m in report.unmatched_numbers],
        })
    target = out / args.out
    target.write_text(json.dumps(payload, indent=2, sort_keys=True,
                                 ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote audit for {len(payload)} summaries to {target}")
    _write_manifest(out, "audit", cfg.as_dict(), [args.summaries], [target])
    return 0


def cmd_correct(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    candidates = orchestrator.read_candidates_jsonl(args.infile)
    by_id = _records_by_id(_load_records(cfg))
    recognizer = _recognizer(cfg)
    embedder = _embedder(cfg)
    corrected = []
    ledgers = {}
    for cand in sorted(candidates, key=lambda c: (c.pair_id, c.method_id)):
        rec = by_id.get(cand.pair_id)
        if rec is None:
            raise VeridictError(f"summary references unknown pair {cand.pair_id!r}")
        new_text, ledger = corrector.correct_summary(
            rec.document_text, cand.text, recognizer=recognizer, embedder=embedder)
        corrected.append(orchestrator.CandidateSummary(
            pair_id=cand.pair_id,
            method_id=f"{cand.method_id}-ss",
            text=new_text,
            chunk_targets=cand.chunk_targets,
            backend_metadata=dict(cand.backend_metadata,
                                  corrected_from=cand.method_id),
        ))
        ledgers[f"{cand.pair_id}/{cand.method_id}"] = ledger
    summaries_path = out / args.out
    ledger_path = out / args.ledger
    orchestrator.write_candidates_jsonl(corrected, summaries_path)
    corrector.write_ledger_json(ledgers, ledger_path)
    replaced = sum(len(l.entries) for l in ledgers.values())
    print(f"corrected {len(corrected)} summaries ({replaced} replacements); "
          f"wrote {summaries_path} and {ledger_path}")
    _write_manifest(out, "correct", cfg.as_dict(), [args.infile],
                    [summaries_path, ledger_path])
    return 0


def cmd_report(args, parser):
    cfg = _merge(args, parser)
    out = _out_dir(cfg)
    reports = []
    for path in args.reports:
        reports.extend(metrics.read_reports_jsonl(path))
    table = evalreport.aggregate(reports)
    csv_path = out / "comparison.csv"
    md_path = out / "comparison.md"
    evalreport.table_to_csv(table, csv_path)
    md_path.write_text(evalreport.table_to_markdown(table), encoding="utf-8")
    outputs = [csv_path, md_path]
    if not args.no_figures:
        outputs.extend(evalreport.render_metric_figures(table, out / "figures"))
    if args.compare:
        method_a, method_b = args.compare
        per_pair = {}
        for rep in reports:
            value = getattr(rep, args.metric)
            if value is not None:
                per_pair.setdefault(rep.method_id, {})[rep.pair_id] = value
        if method_a not in per_pair or method_b not in per_pair:
            raise VeridictError("compare methods not present in the reports")
        pair_ids = sorted(per_pair[method_a])
        result = evalreport.paired_t_test(
            [per_pair[method_a][p] for p in pair_ids],
            [per_pair[method_b][p] for p in pair_ids])
        print(f"t-test {args.metric} {method_a} vs {method_b}: "
              f"t={result.t:.4f} p={result.p:.6f} significant={result.significant}")
        sig_path = out / "significance.json"
        sig_path.write_text(json.dumps({
            "metric": args.metric, "a": method_a, "b": method_b,
            "t": result.t, "p": result.p, "significant": result.significant,
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        outputs.append(sig_path)
    if args.human_eval:
        sheets = evalreport.read_human_eval_csv(args.human_eval)
        means = evalreport.human_eval_aggregate(sheets)
        he_path = out / "human_eval.md"
        he_path.write_text(evalreport.human_eval_table_markdown(means),
                           encoding="utf-8")
        kappas = {metric: evalreport.fleiss_kappa(sheets, metric)
                  for metric in evalreport.HUMAN_METRICS}
        kappa_path = out / "fleiss_kappa.json"
        kappa_path.write_text(json.dumps(kappas, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
        outputs.extend([he_path, kappa_path])
    print(f"wrote comparison table for {len(table.methods)} methods to {csv_path}")
    _write_manifest(out, "report", cfg.as_dict(),
                    list(args.reports) + ([args.human_eval] if args.human_eval else []),
                    outputs)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="sectioned key-value config file")
    sub.add_argument("--corpus", dest="corpus_root", help="corpus root directory")
    sub.add_argument("--source", choices=corpus.SOURCES, default=None)
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.add_argument("--jobs", type=int, default=None)
    sub.add_argument("--sidecar-url", dest="sidecar_url",
                     help="base URL of the model sidecar")
    sub.add_argument("--recognizer", choices=("builtin", "sidecar"), default=None)
    sub.add_argument("--embedder", choices=("builtin", "sidecar"), default=None)
    sub.add_argument("--nli", choices=("mock", "sidecar"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veridict",
        description="Chunked legal-document summarization, evaluation, "
                    "hallucination audit and correction.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ingest", help="load a corpus and write canonical JSONL")
    _add_common(p)
    p.add_argument("--out", default="records.jsonl")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("stats", help="per-split corpus statistics")
    _add_common(p)
    p.add_argument("--csv", help="also write the statistics as CSV")
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("extract", help="CaseSummarizer extractive baseline")
    _add_common(p)
    p.add_argument("--split", default="test", choices=corpus.SPLITS)
    p.add_argument("--budget-words", type=int, default=250)
    p.add_argument("--out", default="extractive.jsonl")
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("summarize", help="LLM summarization over chunks")
    _add_common(p)
    p.add_argument("--split", default="test", choices=corpus.SPLITS)
    p.add_argument("--variant", choices=sorted(VARIANT_ALIASES), default=None)
    p.add_argument("--chunk-words", dest="chunk_words", type=int, default=None)
    p.add_argument("--min-target-words", dest="min_target_words", type=int,
                   default=None)
    p.add_argument("--backend", default=None,
                   help="'echo' or a model name for the HTTP backend")
    p.add_argument("--base-url", dest="base_url", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--out", default="candidates.jsonl")
    p.set_defaults(func=cmd_summarize)

    p = subs.add_parser("evaluate", help="metric reports for generated summaries")
    _add_common(p)
    p.add_argument("--summaries", required=True)
    p.add_argument("--metrics", choices=("all", "quality", "consistency"),
                   default="all")
    p.add_argument("--out", default="report.csv")
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("audit", help="flag low-entailment sentences and "
                                      "unmatched mentions")
    _add_common(p)
    p.add_argument("--summaries", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default="audit.json")
    p.set_defaults(func=cmd_audit)

    p = subs.add_parser("correct", help="semantic-similarity entity replacement")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="corrected.jsonl")
    p.add_argument("--ledger", default="ledger.json")
    p.set_defaults(func=cmd_correct)

    p = subs.add_parser("report", help="comparison tables, figures and "
                                       "significance tests")
    _add_common(p)
    p.add_argument("--reports", nargs="+", required=True,
                   help="metric report JSONL files")
    p.add_argument("--compare", nargs=2, metavar=("METHOD_A", "METHOD_B"))
    p.add_argument("--metric", default="r2_f1", choices=metrics.METRIC_COLUMNS)
    p.add_argument("--human-eval", dest="human_eval",
                   help="human evaluation sheet CSV")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(getattr(args, "config", None))
        return args.func(args, config)
    except VeridictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
