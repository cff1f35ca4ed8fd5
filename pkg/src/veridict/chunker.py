"""Sentence-respecting document chunking with compression-ratio length targets.

A document is packed greedily, sentence by sentence, into chunks of at most
K words; each chunk's target summary length keeps the whole document's
compression ratio (chunk_words x gold_words / doc_words), floored at a
configurable minimum so extreme ratios never produce degenerate prompts.
"""

from dataclasses import dataclass

from .textproc import (
    _round_half_up,
    iter_token_spans,
    normalize,
    split_sentences,
)

MIN_CHUNK_WORDS = 32
DEFAULT_MIN_TARGET_WORDS = 30


@dataclass(frozen=True)
class Chunk:
    text: str
    word_count: int
    target_words: int
    hard_split: bool = False


@dataclass(frozen=True)
class ChunkPlan:
    chunk_size_words: int
    chunks: tuple[Chunk, ...]

    @property
    def total_words(self) -> int:
        return sum(c.word_count for c in self.chunks)


def allocate_target_length(doc_words: int, gold_words: int, chunk_words: int,
                           min_target: int = DEFAULT_MIN_TARGET_WORDS) -> int:
    """Chunk summary budget: round(chunk_words x gold_words / doc_words).

    Rounding is nearest-integer (ties up), isolated in _round_half_up.
    The result is floored at min_target.
    """
    if doc_words < 1 or gold_words < 1 or chunk_words < 1:
        raise ValueError("doc_words, gold_words and chunk_words must all be >= 1")
    raw = chunk_words * gold_words / doc_words
    return max(min_target, _round_half_up(raw))


def plan_chunks(document: str, chunk_size_words: int, gold_length: int,
                min_target: int = DEFAULT_MIN_TARGET_WORDS) -> ChunkPlan:
    """Split a document into chunks of at most K words with length targets.

    Chunk boundaries respect sentence boundaries; a single sentence longer
    than K is hard-split at K words and its pieces flagged. A document of
    at most K words yields one chunk covering the whole document.
    """
    if chunk_size_words < MIN_CHUNK_WORDS:
        raise ValueError(f"chunk size must be >= {MIN_CHUNK_WORDS} words")
    if gold_length < 1:
        raise ValueError("gold_length must be >= 1")
    text = normalize(document)
    sentences = split_sentences(text)
    if not sentences:
        raise ValueError("cannot chunk an empty document")

    # (start, end, word_count, hard) pieces; hard pieces always stand alone.
    pieces = []
    for span in sentences:
        spans = [(s, e) for s, e, _ in iter_token_spans(text[span.start:span.end])]
        words = len(spans)
        if words > chunk_size_words:
            for off in range(0, words, chunk_size_words):
                sub = spans[off:off + chunk_size_words]
                pieces.append((span.start + sub[0][0], span.start + sub[-1][1],
                               len(sub), True))
        else:
            pieces.append((span.start, span.end, words, False))

    doc_words = sum(p[2] for p in pieces)

    groups = []  # lists of contiguous pieces forming one chunk
    current: list = []
    current_words = 0
    for piece in pieces:
        _, _, words, hard = piece
        if hard:
            if current:
                groups.append(current)
                current, current_words = [], 0
            groups.append([piece])
            continue
        if current and current_words + words > chunk_size_words:
            groups.append(current)
            current, current_words = [], 0
        current.append(piece)
        current_words += words
    if current:
        groups.append(current)

    chunks = []
    for group in groups:
        start = group[0][0]
        end = group[-1][1]
        words = sum(p[2] for p in group)
        chunks.append(Chunk(
            text=text[start:end],
            word_count=words,
            target_words=allocate_target_length(doc_words, gold_length, words,
                                                min_target=min_target),
            hard_split=any(p[3] for p in group),
        ))
    return ChunkPlan(chunk_size_words=chunk_size_words, chunks=tuple(chunks))
