"""Semantic-similarity hallucination correction.

Every entity or number that appears in a summary but not in its source
document is replaced, at all of its occurrences, by the source mention
whose embedding has the highest cosine similarity - numbers may only be
replaced by numbers. Text outside the rewritten spans is left byte-for-byte
untouched and every decision is recorded in a ledger.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .backends import CharNgramEmbedder
from .recognizers import NUMBER, BuiltinRecognizer, EntityMention, extract_mentions


@dataclass(frozen=True)
class EntitySets:
    """Document mentions, summary mentions and the hallucinated difference.

    All three are deduplicated by canonical form (first occurrence kept);
    the difference set contains the summary mentions whose canonical form
    never occurs in the document.
    """

    v_j: tuple[EntityMention, ...]
    v_s: tuple[EntityMention, ...]
    v_r: tuple[EntityMention, ...]


@dataclass(frozen=True)
class ReplacementEntry:
    original: EntityMention
    replacement: EntityMention
    similarity: float
    spans_rewritten: tuple[tuple[int, int], ...]


@dataclass
class ReplacementLedger:
    entries: list[ReplacementEntry] = field(default_factory=list)
    unrepairable: list[EntityMention] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.entries or self.unrepairable)


def _dedupe(mentions) -> list[EntityMention]:
    seen = set()
    out = []
    for m in mentions:
        if m.canonical not in seen:
            seen.add(m.canonical)
            out.append(m)
    return out


def compute_entity_sets(document: str, summary: str, recognizer=None) -> EntitySets:
    """Build the document/summary mention sets and their difference."""
    rec = recognizer or BuiltinRecognizer()
    doc_mentions = _dedupe(extract_mentions(document, rec))
    sum_mentions = _dedupe(extract_mentions(summary, rec))
    doc_canonicals = {m.canonical for m in doc_mentions}
    v_r = tuple(m for m in sum_mentions if m.canonical not in doc_canonicals)
    return EntitySets(v_j=tuple(doc_mentions), v_s=tuple(sum_mentions), v_r=v_r)


def correct_summary(document: str, summary: str, recognizer=None,
                    embedder=None) -> tuple[str, ReplacementLedger]:
    """Rewrite hallucinated mentions to their most similar source mention.

    Returns the corrected summary and a ledger with one entry per replaced
    canonical form (or one unrepairable warning when no candidate of the
    right kind exists). Ties on similarity go to the candidate occurring
    earliest in the document.
    """
    rec = recognizer or BuiltinRecognizer()
    embedder = embedder or CharNgramEmbedder()
    sets = compute_entity_sets(document, summary, rec)
    ledger = ReplacementLedger()
    if not sets.v_r:
        return summary, ledger

    all_summary_mentions = extract_mentions(summary, rec)
    candidates = list(sets.v_j)  # already in document order (span start)
    vectors = embedder.embed([m.canonical for m in sets.v_r] +
                             [m.canonical for m in candidates])
    r_vecs = np.asarray(vectors[:len(sets.v_r)], dtype=np.float64)
    j_vecs = np.asarray(vectors[len(sets.v_r):], dtype=np.float64)

    def norm_rows(mat):
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return mat / norms

    if len(candidates):
        sims = norm_rows(r_vecs) @ norm_rows(j_vecs).T
    else:
        sims = np.zeros((len(sets.v_r), 0))

    rewrites: list[tuple[int, int, str]] = []
    for row, wrong in enumerate(sets.v_r):
        if wrong.kind == NUMBER:
            pool = [i for i, c in enumerate(candidates) if c.kind == NUMBER]
        else:
            pool = list(range(len(candidates)))
        if not pool:
            ledger.unrepairable.append(wrong)
            continue
        best = pool[0]
        for i in pool[1:]:
            if sims[row, i] > sims[row, best]:
                best = i
        replacement = candidates[best]
        spans = tuple((m.start, m.end) for m in all_summary_mentions
                      if m.canonical == wrong.canonical)
        for start, end in spans:
            rewrites.append((start, end, replacement.surface))
        ledger.entries.append(ReplacementEntry(
            original=wrong,
            replacement=replacement,
            similarity=float(sims[row, best]),
            spans_rewritten=spans,
        ))

    corrected = summary
    for start, end, surface in sorted(rewrites, reverse=True):
        corrected = corrected[:start] + surface + corrected[end:]
    return corrected, ledger


def _mention_dict(m: EntityMention) -> dict:
    return {"surface": m.surface, "kind": m.kind, "start": m.start,
            "end": m.end, "canonical": m.canonical}


def write_ledger_json(ledgers: dict, path) -> None:
    """Serialize per-pair ledgers: {pair_id: {entries, unrepairable}}."""
    payload = {}
    for pair_id, ledger in sorted(ledgers.items()):
        payload[pair_id] = {
            "entries": [{
                "original": _mention_dict(e.original),
                "replacement": _mention_dict(e.replacement),
                "similarity": round(e.similarity, 9),
                "spans_rewritten": [list(s) for s in e.spans_rewritten],
            } for e in ledger.entries],
            "unrepairable": [_mention_dict(m) for m in ledger.unrepairable],
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
