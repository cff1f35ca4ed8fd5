"""Deterministic sentence segmentation, tokenization and n-gram helpers.

Everything downstream (chunking, extraction, metrics) counts words or
sentences through this module so the counts agree across the pipeline.
"""

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

# Non-terminating abbreviations common in legal text. Lowercased, with the
# trailing period. Loadable from file via load_abbreviations().
DEFAULT_ABBREVIATIONS = frozenset({
    "mr.", "mrs.", "ms.", "dr.", "hon.", "prof.", "rev.", "jr.", "sr.",
    "st.", "v.", "vs.", "no.", "nos.", "rs.", "sec.", "art.", "cl.",
    "co.", "ltd.", "inc.", "corp.", "etc.", "i.e.", "e.g.", "viz.",
    "cf.", "p.", "pp.", "para.", "ors.", "anr.",
})

_TOKEN_RE = re.compile(r"\S+")
_PARAGRAPH_RE = re.compile(r"\n[ \t]*\n")
_TERMINATOR_RE = re.compile(r"[.!?]+[\"'”’)\]]*")
_INITIALS_RE = re.compile(r"^(?:[A-Z]\.)+$")


@dataclass(frozen=True)
class SentenceSpan:
    """Character span of one sentence; spans are ordered and non-overlapping."""

    start: int
    end: int
    index: int


def _round_half_up(x: float) -> int:
    # Nearest integer, ties away from zero. Isolated here so every module
    # rounds word/token estimates the same way.
    return int(math.floor(x + 0.5))


def normalize(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def tokenize_words(text: str) -> list[str]:
    """Whitespace tokens of the NFC-normalized text."""
    return normalize(text).split()


def word_count(text: str) -> int:
    return len(tokenize_words(text))


def iter_token_spans(text: str):
    """Yield (start, end, token) over the raw text, offsets unshifted."""
    for m in _TOKEN_RE.finditer(text):
        yield m.start(), m.end(), m.group()


def ngrams(tokens, n: int) -> Counter:
    """Multiset of lowercase-folded n-grams (sliding window)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    folded = [t.lower() for t in tokens]
    return Counter(tuple(folded[i:i + n]) for i in range(len(folded) - n + 1))


def words_from_tokens(token_count: int) -> int:
    """Word estimate for a token budget (one token is about 3/4 words)."""
    if token_count < 0:
        raise ValueError("token_count must be >= 0")
    return _round_half_up(0.75 * token_count)


def tokens_for_words(words: int) -> int:
    """Token budget needed for a word target (inverse of words_from_tokens)."""
    if words < 0:
        raise ValueError("words must be >= 0")
    return math.ceil(words / 0.75)


def load_abbreviations(path) -> frozenset:
    """Read a one-token-per-line abbreviation file (comments start with #)."""
    items = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        token = line.strip().lower()
        if token and not token.startswith("#"):
            items.add(token)
    return frozenset(items)


def _is_boundary(text: str, match: re.Match, abbreviations) -> bool:
    end = match.end()
    # Only break when followed by whitespace or end of text, so decimals
    # like "3.5" survive.
    if end < len(text) and not text[end].isspace():
        return False
    # The word carrying the terminator, e.g. "suit." or "Rs." or "N.".
    start = match.start()
    wstart = start
    while wstart > 0 and not text[wstart - 1].isspace():
        wstart -= 1
    word = text[wstart:match.end()].strip("\"'“”‘’()[]")
    if word.lower() in abbreviations:
        return False
    if _INITIALS_RE.match(word):
        return False
    # Don't split before a lowercase continuation ("...etc. and so on").
    rest = text[end:].lstrip()
    if rest and rest[0].islower():
        return False
    return True


def split_sentences(text: str, abbreviations=DEFAULT_ABBREVIATIONS) -> list[SentenceSpan]:
    """Segment text into sentence spans.

    Splits on terminator punctuation with a legal-abbreviation exception
    list; paragraph breaks (blank lines) are unconditional boundaries.
    The spans jointly cover all non-whitespace text.
    """
    if not text or not text.strip():
        return []
    cuts = set()
    for m in _TERMINATOR_RE.finditer(text):
        if _is_boundary(text, m, abbreviations):
            cuts.add(m.end())
    for m in _PARAGRAPH_RE.finditer(text):
        cuts.add(m.start())
    spans = []
    prev = 0
    for cut in sorted(cuts | {len(text)}):
        piece = text[prev:cut]
        stripped = piece.strip()
        if stripped:
            start = prev + (len(piece) - len(piece.lstrip()))
            end = start + len(stripped)
            spans.append(SentenceSpan(start=start, end=end, index=len(spans)))
        prev = cut
    return spans


def sentence_texts(text: str, abbreviations=DEFAULT_ABBREVIATIONS) -> list[str]:
    return [text[s.start:s.end] for s in split_sentences(text, abbreviations)]


# ---------------------------------------------------------------------------
# Porter stemmer (classic 1980 algorithm). Used by the METEOR stem stage;
# kept self-contained because no stemming package is available.
# ---------------------------------------------------------------------------

_VOWELS = "aeiou"


def _cons(word: str, i: int) -> bool:
    c = word[i]
    if c in _VOWELS:
        return False
    if c == "y":
        return i == 0 or not _cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    m = 0
    i = 0
    n = len(stem)
    while i < n and _cons(stem, i):
        i += 1
    while i < n:
        while i < n and not _cons(stem, i):
            i += 1
        if i >= n:
            break
        m += 1
        while i < n and _cons(stem, i):
            i += 1
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _cons(stem, i) for i in range(len(stem)))


def _double_cons(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _cons(word, len(word) - 1)


def _cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (
        _cons(word, len(word) - 3)
        and not _cons(word, len(word) - 2)
        and _cons(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


def _replace(word: str, suffix: str, repl: str, min_measure: int) -> str | None:
    if not word.endswith(suffix):
        return None
    stem = word[: len(word) - len(suffix)]
    if _measure(stem) > min_measure - 1:
        return stem + repl
    return word


_STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4 = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


def porter_stem(word: str) -> str:
    """Stem a lowercase word with the classic Porter algorithm."""
    w = word.lower()
    if len(w) <= 2:
        return w

    # Step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    # Step 1b
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    else:
        hit = None
        for suf in ("ed", "ing"):
            if w.endswith(suf) and _has_vowel(w[: -len(suf)]):
                hit = w[: -len(suf)]
                break
        if hit is not None:
            w = hit
            if w.endswith(("at", "bl", "iz")):
                w += "e"
            elif _double_cons(w) and w[-1] not in "lsz":
                w = w[:-1]
            elif _measure(w) == 1 and _cvc(w):
                w += "e"

    # Step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # Step 2
    for suf, repl in _STEP2:
        if w.endswith(suf):
            w = _replace(w, suf, repl, 1)
            break

    # Step 3
    for suf, repl in _STEP3:
        if w.endswith(suf):
            w = _replace(w, suf, repl, 1)
            break

    # Step 4
    for suf in _STEP4:
        if w.endswith(suf):
            stem = w[: len(w) - len(suf)]
            if suf == "ion" and (not stem or stem[-1] not in "st"):
                continue
            if _measure(stem) > 1:
                w = stem
            break

    # Step 5a
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _cvc(stem)):
            w = stem

    # Step 5b
    if _measure(w) > 1 and _double_cons(w) and w.endswith("l"):
        w = w[:-1]

    return w
