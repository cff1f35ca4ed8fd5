"""Unsupervised extractive summarization and pseudo-extractive labels.

The sentence ranker scores each sentence by the mean corpus TF-IDF of its
terms (min-max normalized per document) and adds boosts for dates, named
entities and closeness to section headings, then greedily selects the
highest-scoring sentences until the next one would exceed the word budget.
Output sentences keep their original document order, so extracts are
verbatim - the basis for the entity/number precision = 1.0 property.
"""

import math
import re
from dataclasses import dataclass

from . import metrics
from .recognizers import BuiltinRecognizer, contains_date
from .textproc import split_sentences, tokenize_words

# Small English stopword list; enough to keep function words out of TF-IDF.
STOPWORDS = frozenset("""
a about above after again all also am an and any are as at be because been
before being below between both but by can did do does doing down during
each few for from further had has have having he her here hers him his how
i if in into is it its itself just me more most my no nor not now of off on
once only or other our ours out over own said same she should so some such
than that the their theirs them then there these they this those through to
too under until up upon very was we were what when where which while who
whom why will with would you your yours
""".split())

_HEADING_NUMBER_RE = re.compile(r"^(?:\d+[.)]|[IVXLC]+\.|[A-Z][.)])\s")
_HEADING_WORD_RE = re.compile(r"^(?:section|part|chapter|article)\b", re.IGNORECASE)


def _terms(text: str) -> list[str]:
    out = []
    for tok in tokenize_words(text):
        term = tok.strip(".,;:!?()[]\"'“”‘’").lower()
        if term and term not in STOPWORDS and any(c.isalnum() for c in term):
            out.append(term)
    return out


class TfidfTable:
    """Per-term inverse document frequency over a corpus."""

    def __init__(self, idf: dict, n_docs: int):
        self.idf = idf
        self.n_docs = n_docs

    @classmethod
    def build(cls, documents) -> "TfidfTable":
        docs = list(documents)
        if not docs:
            raise ValueError("cannot build a TF-IDF table from an empty corpus")
        df: dict[str, int] = {}
        for doc in docs:
            for term in set(_terms(doc)):
                df[term] = df.get(term, 0) + 1
        n = len(docs)
        return cls({term: math.log(n / count) for term, count in df.items()}, n)

    def idf_of(self, term: str) -> float:
        # Unseen terms behave like a term occurring in a single document.
        return self.idf.get(term, math.log(self.n_docs) if self.n_docs > 1 else 0.0)


@dataclass(frozen=True)
class BoostConfig:
    date_boost: float = 0.2
    entity_boost: float = 0.2
    heading_boost: float = 0.1
    heading_window: int = 3

    @classmethod
    def from_config(cls, parser) -> "BoostConfig":
        """Read the [case_summarizer] section of a key-value config file."""
        if not parser.has_section("case_summarizer"):
            return cls()
        section = parser["case_summarizer"]
        return cls(
            date_boost=section.getfloat("date_boost", cls.date_boost),
            entity_boost=section.getfloat("entity_boost", cls.entity_boost),
            heading_boost=section.getfloat("heading_boost", cls.heading_boost),
            heading_window=section.getint("heading_window", cls.heading_window),
        )


@dataclass(frozen=True)
class SentenceScore:
    sentence_index: int
    base_tfidf: float     # min-max normalized within the document
    date_boost: float
    entity_boost: float
    heading_boost: float

    @property
    def total(self) -> float:
        return self.base_tfidf + self.date_boost + self.entity_boost + self.heading_boost


@dataclass(frozen=True)
class ExtractiveSummary:
    text: str
    sentence_indices: tuple[int, ...]
    scores: tuple[SentenceScore, ...]
    word_count: int


def _is_heading_line(line: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    tokens = stripped.split()
    if len(tokens) >= 6:
        return False
    if _HEADING_NUMBER_RE.match(stripped) or _HEADING_WORD_RE.match(stripped):
        return True
    alpha = [t for t in tokens if any(c.isalpha() for c in t)]
    if not alpha:
        return False
    if all(t.upper() == t for t in alpha):
        return True
    return all(t[0].isupper() for t in alpha) and len(alpha) >= 2


def _heading_sentence_indices(document: str, sentences) -> set[int]:
    headings = set()
    offset = 0
    for line in document.splitlines(keepends=True):
        if _is_heading_line(line):
            start, end = offset, offset + len(line)
            for span in sentences:
                if span.start < end and start < span.end:
                    headings.add(span.index)
        offset += len(line)
    return headings


def score_sentences(document: str, table: TfidfTable,
                    config: BoostConfig = BoostConfig(),
                    recognizer=None) -> list[SentenceScore]:
    """Score every sentence of a document against a corpus TF-IDF table."""
    recognizer = recognizer or BuiltinRecognizer()
    sentences = split_sentences(document)
    if not sentences:
        raise ValueError("cannot score an empty document")
    texts = [document[s.start:s.end] for s in sentences]
    raw = []
    for text in texts:
        terms = _terms(text)
        raw.append(sum(table.idf_of(t) for t in terms) / len(terms) if terms else 0.0)
    low, high = min(raw), max(raw)
    spread = high - low
    normalized = [(r - low) / spread if spread > 0 else 0.0 for r in raw]
    headings = _heading_sentence_indices(document, sentences)
    scores = []
    for idx, text in enumerate(texts):
        near_heading = any(abs(idx - h) <= config.heading_window for h in headings)
        scores.append(SentenceScore(
            sentence_index=idx,
            base_tfidf=normalized[idx],
            date_boost=config.date_boost if contains_date(text) else 0.0,
            entity_boost=config.entity_boost if recognizer.entities(text) else 0.0,
            heading_boost=config.heading_boost if near_heading else 0.0,
        ))
    return scores


def case_summarizer(document: str, budget_words: int, table: TfidfTable = None,
                    config: BoostConfig = BoostConfig(),
                    recognizer=None) -> ExtractiveSummary:
    """TF-IDF extractive summary within a word budget.

    Sentences are taken in descending total score (earlier sentence wins
    ties) until the next pick would exceed the budget; the selection is
    emitted in original document order, blank-line separated so sentence
    segmentation of the extract matches the source exactly.
    """
    if budget_words < 1:
        raise ValueError("budget_words must be >= 1")
    if table is None:
        table = TfidfTable.build([document])
    scores = score_sentences(document, table, config, recognizer)
    sentences = split_sentences(document)
    texts = [document[s.start:s.end] for s in sentences]
    lengths = [len(tokenize_words(t)) for t in texts]
    order = sorted(range(len(scores)), key=lambda i: (-scores[i].total, i))
    selected = []
    used = 0
    for idx in order:
        if used + lengths[idx] > budget_words:
            break
        selected.append(idx)
        used += lengths[idx]
    selected.sort()
    return ExtractiveSummary(
        text="\n\n".join(texts[i] for i in selected),
        sentence_indices=tuple(selected),
        scores=tuple(scores),
        word_count=used,
    )


def pseudo_extractive_labels(document_sentences, gold_sentences,
                             per_gold: int = 3) -> set[int]:
    """Indices of document sentences labeled summary-worthy.

    For each gold sentence, the document sentences with the highest
    ROUGE-2 F1 are taken (top 3 by default, earlier index on ties) and the
    union over all gold sentences is returned.
    """
    doc = list(document_sentences)
    gold = list(gold_sentences)
    if not doc or not gold:
        raise ValueError("document and gold sentence lists must be non-empty")
    labels: set[int] = set()
    for gsent in gold:
        scored = [(metrics.rouge2(dsent, gsent)[2], i) for i, dsent in enumerate(doc)]
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        labels.update(i for _, i in scored[:per_gold])
    return labels
