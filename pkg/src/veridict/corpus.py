"""Corpus ingestion, word statistics and extractive-fragment coverage/density.

A corpus lives on disk as
    <root>/{train,test,validation}/judgement/<id>.txt
    <root>/{train,test,validation}/summary/<id>.txt
with UTF-8 plain text and pairing by shared basename. The canonical
interchange format is JSON Lines with keys id/document/summary/split/source.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingPairError, UnreadableFileError
from .textproc import tokenize_words, word_count

SPLITS = ("train", "test", "validation")
SOURCES = ("in_abs", "uk_abs", "govreport", "generic")


@dataclass(frozen=True)
class CorpusRecord:
    """One (document, gold summary) pair."""

    id: str
    document_text: str
    gold_summary_text: str
    split: str
    source: str = "generic"

    def __post_init__(self):
        if not self.document_text:
            raise ValueError(f"record {self.id!r}: empty document")
        if not self.gold_summary_text:
            raise ValueError(f"record {self.id!r}: empty gold summary")
        if self.split not in SPLITS:
            raise ValueError(f"record {self.id!r}: unknown split {self.split!r}")
        if self.source not in SOURCES:
            raise ValueError(f"record {self.id!r}: unknown source {self.source!r}")


@dataclass(frozen=True)
class CorpusStats:
    n_documents: int
    avg_doc_words: float
    avg_summary_words: float
    coverage: float
    density: float


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from exc


def load_corpus(root_path, source: str = "generic", splits=SPLITS) -> list[CorpusRecord]:
    """Load every (judgement, summary) pair under the directory layout.

    Raises MissingPairError when a basename appears on only one side.
    An existing root with no split directories yields an empty list.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise UnreadableFileError(f"corpus root {root} is not a directory")
    records = []
    for split in splits:
        jdir = root / split / "judgement"
        sdir = root / split / "summary"
        if not jdir.is_dir() and not sdir.is_dir():
            continue
        judgements = {p.stem: p for p in jdir.glob("*.txt")} if jdir.is_dir() else {}
        summaries = {p.stem: p for p in sdir.glob("*.txt")} if sdir.is_dir() else {}
        missing = sorted(set(judgements) ^ set(summaries))
        if missing:
            raise MissingPairError(
                f"unpaired files in {root / split}: {', '.join(missing)}"
            )
        for rid in sorted(judgements):
            records.append(CorpusRecord(
                id=rid,
                document_text=_read_text(judgements[rid]),
                gold_summary_text=_read_text(summaries[rid]),
                split=split,
                source=source,
            ))
    seen = set()
    for rec in records:
        key = (rec.split, rec.id)
        if key in seen:
            raise ValueError(f"duplicate record id {rec.id!r} in split {rec.split!r}")
        seen.add(key)
    return records


def write_records_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({
                "id": rec.id,
                "document": rec.document_text,
                "summary": rec.gold_summary_text,
                "split": rec.split,
                "source": rec.source,
            }, ensure_ascii=False, sort_keys=True) + "\n")


def read_records_jsonl(path) -> list[CorpusRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(CorpusRecord(
                id=obj["id"],
                document_text=obj["document"],
                gold_summary_text=obj["summary"],
                split=obj["split"],
                source=obj.get("source", "generic"),
            ))
    return records


def greedy_fragments(article_tokens, summary_tokens) -> list[int]:
    """Lengths of greedily matched shared token runs (Newsroom formulation).

    At each summary position, the longest run starting there that also
    occurs in the article is taken (earliest article occurrence on ties);
    unmatched positions advance by one.
    """
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(article_tokens):
        positions.setdefault(tok, []).append(j)
    frags = []
    i = 0
    n = len(summary_tokens)
    a = len(article_tokens)
    while i < n:
        best = 0
        for j in positions.get(summary_tokens[i], ()):
            k = 0
            while i + k < n and j + k < a and summary_tokens[i + k] == article_tokens[j + k]:
                k += 1
            if k > best:
                best = k
        if best:
            frags.append(best)
            i += best
        else:
            i += 1
    return frags


def pair_coverage_density(document_text: str, summary_text: str) -> tuple[float, float]:
    doc = [t.lower() for t in tokenize_words(document_text)]
    summ = [t.lower() for t in tokenize_words(summary_text)]
    if not summ:
        return 0.0, 0.0
    frags = greedy_fragments(doc, summ)
    coverage = sum(frags) / len(summ)
    density = sum(f * f for f in frags) / len(summ)
    return coverage, density


def compute_coverage_density(records) -> tuple[float, float]:
    """Mean per-pair extractive-fragment coverage and density."""
    if not records:
        raise ValueError("cannot compute coverage/density of an empty corpus")
    cov = 0.0
    den = 0.0
    for rec in records:
        c, d = pair_coverage_density(rec.document_text, rec.gold_summary_text)
        cov += c
        den += d
    return cov / len(records), den / len(records)


def compute_stats(records) -> CorpusStats:
    """Word-count averages plus coverage/density over a record list.

    Averages add up the per-document (per-summary) word counts and divide
    by the number of documents (summaries).
    """
    if not records:
        raise ValueError("cannot compute statistics of an empty corpus")
    n = len(records)
    doc_words = sum(word_count(r.document_text) for r in records)
    sum_words = sum(word_count(r.gold_summary_text) for r in records)
    coverage, density = compute_coverage_density(records)
    return CorpusStats(
        n_documents=n,
        avg_doc_words=doc_words / n,
        avg_summary_words=sum_words / n,
        coverage=coverage,
        density=density,
    )
