"""Acceptance suite: one test per criterion, each printing a PASS line and
enforcing its runtime budget. Everything runs hermetically with the builtin
recognizer, the character n-gram embedder, the verbatim NLI and the echo
generation backend; the dataset-statistics criterion is skipped unless real
corpora are available under VERIDICT_DATA_DIR.
"""

import itertools
import json
import math
import os
import random
import time
from pathlib import Path

import pytest
from scipy import stats as scipy_stats

from conftest import CORPUS_ROOT, SCENARIO_DOCUMENT, SCENARIO_SUMMARY
from veridict.backends import VerbatimNLI
from veridict.chunker import allocate_target_length, plan_chunks
from veridict.cli import main as cli_main
from veridict.corpus import compute_coverage_density, compute_stats, load_corpus
from veridict.corrector import compute_entity_sets, correct_summary
from veridict.evalreport import HumanEvalSheet, fleiss_kappa, paired_t_test
from veridict.extractive import TfidfTable, case_summarizer
from veridict.metrics import (
    bertscore,
    meteor,
    neprec,
    numprec,
    rouge2,
    rougeL,
    summac,
)
from veridict.textproc import tokenize_words


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds
        self.start = time.monotonic()

    def done(self):
        elapsed = time.monotonic() - self.start
        assert elapsed < self.seconds, \
            f"{self.name} took {elapsed:.1f}s (budget {self.seconds}s)"
        print(f"[PASS] {self.name} ({elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Brute-force oracles (independent of the production code paths).
# ---------------------------------------------------------------------------

def oracle_rouge2(candidate, reference):
    ct, rt = candidate.split(), reference.split()
    cb = [tuple(ct[i:i + 2]) for i in range(len(ct) - 1)]
    rb = [tuple(rt[i:i + 2]) for i in range(len(rt) - 1)]
    pool = list(rb)
    overlap = 0
    for gram in cb:
        if gram in pool:
            pool.remove(gram)
            overlap += 1
    p = overlap / len(cb) if cb else 0.0
    r = overlap / len(rb) if rb else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def _is_subsequence(sub, seq):
    it = iter(seq)
    return all(x in it for x in sub)


def oracle_rougeL(candidate, reference):
    ct, rt = candidate.split(), reference.split()
    short, long_ = (ct, rt) if len(ct) <= len(rt) else (rt, ct)
    lcs = 0
    for mask in range(1 << len(short)):
        sub = [short[i] for i in range(len(short)) if mask >> i & 1]
        if len(sub) > lcs and _is_subsequence(sub, long_):
            lcs = len(sub)
    p = lcs / len(ct) if ct else 0.0
    r = lcs / len(rt) if rt else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def _close(a, b, tol=1e-9):
    return all(math.isclose(x, y, abs_tol=tol) for x, y in zip(a, b))


def test_criterion_rouge_oracle_equivalence():
    # Exhaustive over every pair of {a,b,c} token sequences with a combined
    # length of at most 8 (83,653 pairs; all-pairs with each side up to 8 is
    # ~10^8 pairs, far beyond the runtime budget for a brute-force oracle),
    # plus 2,000 random pairs with each side up to 8 tokens.
    budget = Budget("ROUGE oracle equivalence (rouge2 + rougeL)", 30)
    seqs = {k: [" ".join(t) for t in itertools.product("abc", repeat=k)]
            for k in range(9)}
    for m in range(9):
        for n in range(9 - m):
            for cand in seqs[m]:
                for ref in seqs[n]:
                    assert _close(rouge2(cand, ref), oracle_rouge2(cand, ref))
                    assert _close(rougeL(cand, ref), oracle_rougeL(cand, ref))
    rng = random.Random(20240311)
    for _ in range(2000):
        cand = " ".join(rng.choice("abc") for _ in range(rng.randint(0, 8)))
        ref = " ".join(rng.choice("abc") for _ in range(rng.randint(0, 8)))
        assert _close(rouge2(cand, ref), oracle_rouge2(cand, ref))
        assert _close(rougeL(cand, ref), oracle_rougeL(cand, ref))
    budget.done()


def test_criterion_metric_ranges_and_f1_invariants():
    budget = Budget("metric range/F1 invariants on 1,000 fuzzed pairs", 30)
    rng = random.Random(7)
    vocab = ["court", "appeal", "Rs.", "29,500", "King", "the", "of", "1949",
             "Bombay", "order", "fine", "section", "witness", "deed", "none"]

    def fuzz_text():
        return " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 25)))

    for _ in range(1000):
        cand, ref = fuzz_text(), fuzz_text()
        for p, r, f1 in (rouge2(cand, ref), rougeL(cand, ref)):
            assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0 and 0.0 <= f1 <= 1.0
            expected = 2 * p * r / (p + r) if p + r else 0.0
            assert math.isclose(f1, expected, abs_tol=1e-9)
        assert 0.0 <= meteor(cand, ref) <= 1.0
        assert 0.0 <= bertscore(cand, ref) <= 1.0
        assert 0.0 <= summac(cand, ref, VerbatimNLI()) <= 1.0
        assert 0.0 <= neprec(ref, cand) <= 1.0
        assert 0.0 <= numprec(ref, cand) <= 1.0
    budget.done()


def test_criterion_extractive_consistency():
    budget = Budget("extractive NEPrec = NumPrec = 1.0 on 50 summaries", 60)
    records = load_corpus(CORPUS_ROOT)
    assert len(records) == 10
    table = TfidfTable.build([r.document_text for r in records])
    checked = 0
    for record in records:
        for budget_words in (60, 90, 120, 150, 200):
            extract = case_summarizer(record.document_text, budget_words,
                                      table=table)
            assert neprec(record.document_text, extract.text) == 1.0
            assert numprec(record.document_text, extract.text) == 1.0
            checked += 1
    assert checked == 50
    budget.done()


def test_criterion_corrector_postconditions():
    budget = Budget("corrector postconditions incl. 26,500 -> 29,500", 30)
    records = load_corpus(CORPUS_ROOT)
    # The published correction scenario plus perturbed fixture summaries.
    suite = [(SCENARIO_DOCUMENT, SCENARIO_SUMMARY)]
    for record in records[:5]:
        broken = record.gold_summary_text.replace("29,500", "26,500") \
            .replace("Aiyar, N. Chandrasekhara", "Chandrasekhar A. Lama") \
            .replace("12,750", "12,850").replace("1951", "1961")
        suite.append((record.document_text, broken))
    for document, summary in suite:
        corrected, ledger = correct_summary(document, summary)
        assert compute_entity_sets(document, corrected).v_r == ()
        again, second = correct_summary(document, corrected)
        assert again == corrected
        assert not second.entries and not second.unrepairable
        # byte identity outside the rewritten spans
        spans = sorted((s, e.replacement.surface)
                       for e in ledger.entries for s in e.spans_rewritten)
        rebuilt = []
        cursor = 0
        for (start, end), surface in spans:
            rebuilt.append(summary[cursor:start])
            rebuilt.append(surface)
            cursor = end
        rebuilt.append(summary[cursor:])
        assert "".join(rebuilt) == corrected
    corrected, ledger = correct_summary(SCENARIO_DOCUMENT, SCENARIO_SUMMARY)
    assert "Rs. 29,500" in corrected
    replacements = {e.original.canonical: e.replacement.surface
                    for e in ledger.entries}
    assert replacements["26500"] == "29,500"
    assert replacements["chandrasekhar a. lama"] == "Aiyar, N. Chandrasekhara"
    budget.done()


def test_criterion_chunk_planner():
    budget = Budget("chunk planner partition + target formula (200 docs)", 10)
    assert allocate_target_length(4783, 932, 1024) == 200
    rng = random.Random(17)
    words = "alpha beta gamma delta epsilon zeta eta theta".split()
    for _ in range(200):
        n_sentences = rng.randint(1, 40)
        sentences = []
        for i in range(n_sentences):
            length = rng.randint(2, 90)
            body = " ".join(rng.choice(words) for _ in range(length - 1))
            sentences.append(f"{body.capitalize()} s{i}.")
        document = " ".join(sentences)
        gold = rng.randint(1, 800)
        k = rng.choice((32, 64, 128, 1024))
        plan = plan_chunks(document, k, gold)
        doc_tokens = tokenize_words(document)
        rebuilt = []
        for chunk in plan.chunks:
            assert chunk.word_count <= k
            assert chunk.target_words == allocate_target_length(
                len(doc_tokens), gold, chunk.word_count)
            rebuilt.extend(tokenize_words(chunk.text))
        assert rebuilt == doc_tokens
    budget.done()


DATA_DIR = os.environ.get("VERIDICT_DATA_DIR", "")
EXPECTED_CORPUS_STATS = {
    # corpus dir -> (split, avg_doc_words, avg_summary_words), coverage, density
    "IN-Abs": ([("train", 4368.49, 839.75), ("test", 4782.71, 932.01)],
               0.35, 1.67),
    "UK-Abs": ([("train", 12812.01, 1097.38), ("test", 14476.49, 1095.49)],
               0.23, 1.53),
    "GOVREPORT": ([("train", 9407.17, 556.75), ("test", 9409.45, 540.48),
                   ("validation", 9417.19, 545.04)],
                  0.16, 1.40),
}


@pytest.mark.parametrize("corpus_name", sorted(EXPECTED_CORPUS_STATS))
def test_criterion_dataset_statistics(corpus_name):
    root = Path(DATA_DIR) / corpus_name if DATA_DIR else None
    if root is None or not root.is_dir():
        pytest.skip(f"{corpus_name} not present locally "
                    f"(set VERIDICT_DATA_DIR to enable)")
    budget = Budget(f"dataset statistics vs published values ({corpus_name})", 300)
    splits, coverage, density = EXPECTED_CORPUS_STATS[corpus_name]
    records = load_corpus(root)
    for split, doc_words, summary_words in splits:
        split_records = [r for r in records if r.split == split]
        stats = compute_stats(split_records)
        assert stats.avg_doc_words == pytest.approx(doc_words, rel=0.02)
        assert stats.avg_summary_words == pytest.approx(summary_words, rel=0.02)
    got_cov, got_den = compute_coverage_density(records)
    assert got_cov == pytest.approx(coverage, abs=0.05)
    assert got_den == pytest.approx(density, abs=0.05)
    budget.done()


def test_criterion_summac_aggregation():
    budget = Budget("SummaC = verbatim ratio on 100 constructed pairs", 10)
    rng = random.Random(29)
    pool = [f"Document sentence number {i} stands on its own." for i in range(12)]
    document = " ".join(pool)
    for _ in range(100):
        verbatim = rng.randint(0, 6)
        novel = rng.randint(1, 6)
        sentences = rng.sample(pool, verbatim) + \
            [f"Invented claim number {i} appears here." for i in range(novel)]
        rng.shuffle(sentences)
        summary = " ".join(sentences)
        expected = verbatim / (verbatim + novel)
        assert summac(document, summary, VerbatimNLI()) == expected
    budget.done()


def test_criterion_statistics():
    budget = Budget("paired t-test oracle match + Fleiss kappa checks", 30)
    rng = random.Random(4242)
    for _ in range(50):
        n = rng.randint(2, 60)
        a = [rng.gauss(0.5, 0.25) for _ in range(n)]
        b = [a_i - rng.gauss(0.03, 0.1) for a_i in a]
        ours = paired_t_test(a, b)
        ref = scipy_stats.ttest_rel(a, b)
        assert math.isclose(ours.t, float(ref.statistic), abs_tol=1e-6)
        assert math.isclose(ours.p, float(ref.pvalue), abs_tol=1e-6)

    def sheets_from(ratings):
        out = []
        for item, scores in enumerate(ratings):
            for rater, score in enumerate(scores):
                out.append(HumanEvalSheet(
                    document_id=f"d{item}", method_id="m",
                    annotator_id=f"a{rater}", informativeness=score,
                    redundancy=1, factuality=1, coherence=1))
        return out

    perfect = sheets_from([[2, 2, 2], [4, 4, 4], [5, 5, 5]])
    assert fleiss_kappa(perfect, "informativeness") == pytest.approx(1.0)

    uniform = sheets_from([[rng.randint(1, 5) for _ in range(3)]
                           for _ in range(10000)])
    assert abs(fleiss_kappa(uniform, "informativeness")) < 0.05

    hand = sheets_from([[1, 1, 1], [2, 2, 2], [1, 2, 2]])
    assert fleiss_kappa(hand, "informativeness") == pytest.approx(0.55)
    budget.done()


def test_criterion_end_to_end_determinism(tmp_path):
    budget = Budget("end-to-end determinism (summarize+evaluate+correct)", 120)
    outputs = {}
    for run_name in ("first", "second"):
        out = tmp_path / run_name
        out.mkdir()
        for argv in (
            ["summarize", "--corpus", str(CORPUS_ROOT), "--split", "test",
             "--variant", "summ", "--chunk-words", "64", "--backend", "echo",
             "--out-dir", str(out), "--jobs", "4"],
            ["evaluate", "--corpus", str(CORPUS_ROOT),
             "--summaries", str(out / "candidates.jsonl"),
             "--nli", "mock", "--embedder", "builtin",
             "--recognizer", "builtin", "--out-dir", str(out), "--jobs", "4"],
            ["correct", "--corpus", str(CORPUS_ROOT),
             "--in", str(out / "candidates.jsonl"),
             "--embedder", "builtin", "--out-dir", str(out)],
        ):
            assert cli_main(argv) == 0
        outputs[run_name] = {p.name: p.read_bytes()
                             for p in sorted(out.iterdir()) if p.is_file()}
    assert outputs["first"].keys() == outputs["second"].keys()
    for name, blob in outputs["first"].items():
        assert blob == outputs["second"][name], f"{name} differs between runs"
    # sanity: the run produced real artifacts
    assert json.loads((tmp_path / "first" / "summarize_manifest.json")
                      .read_text())["outputs"]
    budget.done()
