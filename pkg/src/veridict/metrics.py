"""Summary quality and consistency metrics.

Quality (against the gold summary): ROUGE-2, ROUGE-L, METEOR and an
embedding-based greedy-matching F1. Consistency (against the source
document): entity precision, number precision and an NLI-based score that
averages per-sentence maximum entailment. The audit operation surfaces the
raw evidence behind low consistency: flagged sentences and unmatched
mentions.
"""

import csv
import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .backends import CharNgramEmbedder, VerbatimNLI
from .recognizers import BuiltinRecognizer, EntityMention, extract_numbers
from .textproc import ngrams, porter_stem, sentence_texts, tokenize_words

METRIC_COLUMNS = (
    "r2_p", "r2_r", "r2_f1", "rl_p", "rl_r", "rl_f1",
    "meteor", "bertscore", "summac", "neprec", "numprec",
)


@dataclass
class MetricReport:
    """Per-pair metric values with provenance; column order mirrors the
    comparison tables."""

    pair_id: str
    method_id: str
    r2_p: float | None = None
    r2_r: float | None = None
    r2_f1: float | None = None
    rl_p: float | None = None
    rl_r: float | None = None
    rl_f1: float | None = None
    meteor: float | None = None
    bertscore: float | None = None
    summac: float | None = None
    neprec: float | None = None
    numprec: float | None = None

    def values(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name in METRIC_COLUMNS}


@dataclass
class AuditReport:
    pair_id: str
    method_id: str
    flagged_sentences: list  # (sentence index, max entailment score)
    unmatched_entities: list[EntityMention]
    unmatched_numbers: list[EntityMention]


def _tokens(text: str) -> list[str]:
    return [t.lower() for t in tokenize_words(text)]


def _f1(p: float, r: float) -> float:
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def rouge2(candidate: str, reference: str) -> tuple[float, float, float]:
    """Bigram-overlap precision/recall/F1 with multiset semantics."""
    cand = ngrams(_tokens(candidate), 2)
    ref = ngrams(_tokens(reference), 2)
    n_cand = sum(cand.values())
    n_ref = sum(ref.values())
    overlap = sum((cand & ref).values())
    p = overlap / n_cand if n_cand else 0.0
    r = overlap / n_ref if n_ref else 0.0
    return p, r, _f1(p, r)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def rougeL(candidate: str, reference: str) -> tuple[float, float, float]:
    """Longest-common-subsequence precision/recall/F1 over word tokens."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand or not ref:
        return 0.0, 0.0, 0.0
    lcs = _lcs_length(cand, ref)
    p = lcs / len(cand)
    r = lcs / len(ref)
    return p, r, _f1(p, r)


def _meteor_align(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    # Stage 1: exact matches, each candidate token to the first unused
    # identical reference token. Stage 2: the same over Porter stems.
    matches = []
    used_ref = [False] * len(ref)
    matched_cand = [False] * len(cand)
    for stage_key in (lambda t: t, porter_stem):
        ref_keys = [stage_key(t) for t in ref]
        for i, tok in enumerate(cand):
            if matched_cand[i]:
                continue
            key = stage_key(tok)
            for j, rkey in enumerate(ref_keys):
                if not used_ref[j] and key == rkey:
                    matches.append((i, j))
                    used_ref[j] = True
                    matched_cand[i] = True
                    break
    return sorted(matches)


def meteor(candidate: str, reference: str, alpha: float = 0.9,
           beta: float = 3.0, gamma: float = 0.5) -> float:
    """METEOR with exact + stem matching and the fragmentation penalty."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand or not ref:
        return 0.0
    matches = _meteor_align(cand, ref)
    m = len(matches)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    fmean = precision * recall / (alpha * precision + (1.0 - alpha) * recall)
    chunks = 1
    for (ci, ri), (cj, rj) in zip(matches, matches[1:]):
        if cj != ci + 1 or rj != ri + 1:
            chunks += 1
    penalty = gamma * (chunks / m) ** beta
    return fmean * (1.0 - penalty)


def bertscore(candidate: str, reference: str, embedder=None) -> float:
    """Greedy max-cosine token matching F1 over backend embeddings."""
    embedder = embedder or CharNgramEmbedder()
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand or not ref:
        return 0.0
    vectors = embedder.embed(cand + ref)
    cv = np.asarray(vectors[:len(cand)], dtype=np.float64)
    rv = np.asarray(vectors[len(cand):], dtype=np.float64)
    cn = np.linalg.norm(cv, axis=1, keepdims=True)
    rn = np.linalg.norm(rv, axis=1, keepdims=True)
    cn[cn == 0.0] = 1.0
    rn[rn == 0.0] = 1.0
    sim = (cv / cn) @ (rv / rn).T
    p = float(np.mean(np.max(sim, axis=1)))
    r = float(np.mean(np.max(sim, axis=0)))
    return _f1(max(p, 0.0), max(r, 0.0))


def neprec(document: str, summary: str, recognizer=None) -> float:
    """Fraction of summary named entities that also occur in the document.

    A summary with no entities scores 1.0 (nothing to contradict).
    """
    rec = recognizer or BuiltinRecognizer()
    summary_set = {m.canonical for m in rec.entities(summary)}
    if not summary_set:
        return 1.0
    document_set = {m.canonical for m in rec.entities(document)}
    return len(summary_set & document_set) / len(summary_set)


def numprec(document: str, summary: str) -> float:
    """Fraction of summary numbers that also appear in the document."""
    summary_set = {m.canonical for m in extract_numbers(summary)}
    if not summary_set:
        return 1.0
    document_set = {m.canonical for m in extract_numbers(document)}
    return len(summary_set & document_set) / len(summary_set)


def _max_entailments(document: str, summary: str, nli) -> list[float]:
    doc_sentences = sentence_texts(document)
    scores = []
    for hyp in sentence_texts(summary):
        best = 0.0
        for premise in doc_sentences:
            entail, _, _ = nli.scores(premise, hyp)
            if entail > best:
                best = entail
        scores.append(best)
    return scores


def summac(document: str, summary: str, nli=None, aggregate: str = "mean") -> float:
    """Per-sentence max entailment against the document, averaged.

    aggregate may be "mean" (default) or "min".
    """
    nli = nli or VerbatimNLI()
    scores = _max_entailments(document, summary, nli)
    if not scores:
        return 0.0
    if aggregate == "min":
        return min(scores)
    if aggregate != "mean":
        raise ValueError(f"unknown aggregation {aggregate!r}")
    return sum(scores) / len(scores)


def audit(document: str, summary: str, recognizer=None, nli=None,
          nli_threshold: float = 0.5, pair_id: str = "", method_id: str = "") -> AuditReport:
    """Evidence behind the consistency scores: summary sentences whose max
    entailment falls below the threshold, plus mentions absent from the
    document (one representative per canonical form)."""
    rec = recognizer or BuiltinRecognizer()
    nli = nli or VerbatimNLI()
    flagged = [(i, score)
               for i, score in enumerate(_max_entailments(document, summary, nli))
               if score < nli_threshold]
    doc_entities = {m.canonical for m in rec.entities(document)}
    doc_numbers = {m.canonical for m in extract_numbers(document)}
    unmatched_entities = []
    seen = set()
    for m in rec.entities(summary):
        if m.canonical not in doc_entities and m.canonical not in seen:
            unmatched_entities.append(m)
            seen.add(m.canonical)
    unmatched_numbers = []
    seen = set()
    for m in extract_numbers(summary):
        if m.canonical not in doc_numbers and m.canonical not in seen:
            unmatched_numbers.append(m)
            seen.add(m.canonical)
    return AuditReport(
        pair_id=pair_id,
        method_id=method_id,
        flagged_sentences=flagged,
        unmatched_entities=unmatched_entities,
        unmatched_numbers=unmatched_numbers,
    )


def compute_report(record, candidate, recognizer=None, embedder=None, nli=None,
                   which: str = "all") -> MetricReport:
    """All metrics for one (record, candidate summary) pair.

    which: "all", "quality" (gold-match metrics only) or "consistency".
    """
    if which not in ("all", "quality", "consistency"):
        raise ValueError(f"unknown metric group {which!r}")
    report = MetricReport(pair_id=candidate.pair_id, method_id=candidate.method_id)
    text = candidate.text
    if which in ("all", "quality"):
        gold = record.gold_summary_text
        report.r2_p, report.r2_r, report.r2_f1 = rouge2(text, gold)
        report.rl_p, report.rl_r, report.rl_f1 = rougeL(text, gold)
        report.meteor = meteor(text, gold)
        report.bertscore = bertscore(text, gold, embedder)
    if which in ("all", "consistency"):
        doc = record.document_text
        report.summac = summac(doc, text, nli)
        report.neprec = neprec(doc, text, recognizer)
        report.numprec = numprec(doc, text)
    return report


def write_reports_csv(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("pair_id", "method_id") + METRIC_COLUMNS)
        for rep in reports:
            row = [rep.pair_id, rep.method_id]
            for col in METRIC_COLUMNS:
                value = getattr(rep, col)
                row.append("" if value is None else f"{value:.6f}")
            writer.writerow(row)


def write_reports_jsonl(reports, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            obj = {"pair_id": rep.pair_id, "method_id": rep.method_id}
            obj.update(rep.values())
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def read_reports_jsonl(path) -> list[MetricReport]:
    reports = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            reports.append(MetricReport(**obj))
    return reports


def harmonic_consistent(report: MetricReport, tol: float = 1e-9) -> bool:
    """Check the F1 = harmonic(P, R) invariant on a report."""
    for p, r, f in (("r2_p", "r2_r", "r2_f1"), ("rl_p", "rl_r", "rl_f1")):
        pv, rv, fv = getattr(report, p), getattr(report, r), getattr(report, f)
        if pv is None:
            continue
        if not math.isclose(fv, _f1(pv, rv), abs_tol=tol):
            return False
    return True
