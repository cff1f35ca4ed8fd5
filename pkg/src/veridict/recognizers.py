"""Named-entity and number extraction.

Two tiers: a deterministic builtin rule recognizer (capitalized-token runs,
honorific-prefixed names, all-caps acronyms, digit groups) used for all
consistency properties, and a remote recognizer that returns spans from the
model sidecar verbatim. Entity identity for set operations is the
case-folded canonical string.
"""

import hashlib
import re
from dataclasses import dataclass

import requests

from .errors import BackendUnavailableError
from .textproc import iter_token_spans, split_sentences

NAMED_ENTITY = "named_entity"
NUMBER = "number"

# Bare honorific forms; a trailing period and apostrophes are stripped
# before lookup. Honorifics mark a name but are excluded from its surface.
HONORIFICS = frozenset({
    "mr", "mrs", "ms", "dr", "hon", "honble", "honorable", "honourable",
    "justice", "judge", "lord", "lady", "sir", "dame", "shri", "smt",
    "prof", "rev", "adv",
})

# Currency/citation abbreviations that capitalize like names but are not
# entities on their own; dropped only when they form a whole run.
EXCLUDED_SINGLETONS = frozenset({
    "rs", "re", "no", "nos", "vs", "sec", "art", "cl", "vol", "pp",
    "ors", "anr", "viz",
})

_INITIALS_RE = re.compile(r"^(?:[A-Z]\.)+$")
_ACRONYM_RE = re.compile(r"^[A-Z][A-Z&]+$")
_CAPWORD_RE = re.compile(r"^[A-Z][A-Za-z'’\-]*[a-z]$")
_LEAD_STRIP = "(\"'“‘[{"
_WRAP_STRIP = ")\"'”’]}"

_NUMBER_RE = re.compile(
    r"(?<!\d)(?<!\d[,.])(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?!\d)"
)

_MONTHS = ("january", "february", "march", "april", "may", "june", "july",
           "august", "september", "october", "november", "december",
           "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
           "oct", "nov", "dec")
_DATE_RE = re.compile(
    r"\b(?:%s)\b[.,]?\s+\d{1,2}|\b\d{1,2}(?:st|nd|rd|th)?\s+(?:%s)\b|"
    r"\b\d{1,2}[/-]\d{1,2}[/-]\d{2,4}\b|\b(?:1[5-9]\d{2}|20\d{2})\b"
    % ("|".join(_MONTHS), "|".join(_MONTHS)),
    re.IGNORECASE,
)


@dataclass(frozen=True)
class EntityMention:
    """An entity or number occurrence; surface always equals text[start:end]."""

    surface: str
    kind: str
    start: int
    end: int
    canonical: str


def _canonical_entity(surface: str) -> str:
    return " ".join(surface.split()).casefold()


def _bare_form(core: str) -> str:
    return core.lower().rstrip(".'’").replace("'", "").replace("’", "")


@dataclass
class _Tok:
    start: int
    end: int          # end of the mention-worthy part (punctuation trimmed)
    namelike: bool
    is_initials: bool = False
    comma_after: bool = False
    break_after: bool = False
    single_capword: bool = False
    sentence_initial: bool = False
    honorific: bool = False


def _classify(token: str, start: int) -> _Tok:
    # Trim leading quotes/brackets.
    lead = 0
    while lead < len(token) and token[lead] in _LEAD_STRIP:
        lead += 1
    core = token[lead:]
    cstart = start + lead
    while core and core[-1] in _WRAP_STRIP:
        core = core[:-1]
    comma_after = False
    if core.endswith((",", ";", ":")):
        comma_after = core.endswith(",")
        core = core[:-1]
    break_after = False
    if not (_INITIALS_RE.match(core) or _bare_form(core) in HONORIFICS):
        stripped = core.rstrip(".!?")
        if stripped != core:
            break_after = True
            core = stripped
    if not core:
        return _Tok(start, start, namelike=False)
    end = cstart + len(core)
    if _bare_form(core) in HONORIFICS:
        return _Tok(cstart, end, namelike=True, honorific=True,
                    comma_after=comma_after, break_after=break_after)
    if _INITIALS_RE.match(core):
        return _Tok(cstart, end, namelike=True, is_initials=True,
                    comma_after=comma_after, break_after=break_after)
    if _ACRONYM_RE.match(core):
        return _Tok(cstart, end, namelike=True,
                    comma_after=comma_after, break_after=break_after)
    if _CAPWORD_RE.match(core):
        return _Tok(cstart, end, namelike=True, single_capword=True,
                    comma_after=comma_after, break_after=break_after)
    return _Tok(cstart, end, namelike=False)


def _finish_run(run: list[_Tok], text: str, out: list[EntityMention]) -> None:
    if not run:
        return
    had_honorific = False
    while run and run[0].honorific:
        had_honorific = True
        run.pop(0)
    if not run:
        return
    if len(run) == 1 and not had_honorific:
        tok = run[0]
        if tok.single_capword and tok.sentence_initial:
            return
        if tok.is_initials:
            return
        if text[tok.start:tok.end].lower().rstrip(".") in EXCLUDED_SINGLETONS:
            return
    start = run[0].start
    end = run[-1].end
    surface = text[start:end]
    out.append(EntityMention(
        surface=surface,
        kind=NAMED_ENTITY,
        start=start,
        end=end,
        canonical=_canonical_entity(surface),
    ))


class BuiltinRecognizer:
    """Pure rule recognizer; identical text always yields identical mentions."""

    name = "builtin"

    def entities(self, text: str) -> list[EntityMention]:
        if not text:
            return []
        sentence_starts = {span.start for span in split_sentences(text)}
        out: list[EntityMention] = []
        run: list[_Tok] = []
        prev_end = 0
        for start, end, token in iter_token_spans(text):
            if run and "\n" in text[prev_end:start]:
                _finish_run(run, text, out)
                run = []
            tok = _classify(token, start)
            tok.sentence_initial = tok.start in sentence_starts or start in sentence_starts
            if not tok.namelike:
                _finish_run(run, text, out)
                run = []
            else:
                if run and run[-1].comma_after and not tok.is_initials:
                    _finish_run(run, text, out)
                    run = []
                run.append(tok)
                if tok.break_after:
                    _finish_run(run, text, out)
                    run = []
            prev_end = end
        _finish_run(run, text, out)
        return out

    def numbers(self, text: str) -> list[EntityMention]:
        return extract_numbers(text)


class RemoteRecognizer:
    """Entities from the sidecar /ner endpoint; numbers stay rule-based."""

    name = "sidecar"

    def __init__(self, base_url: str, timeout: float = 30.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self._cache: dict[str, list[EntityMention]] = {}

    def entities(self, text: str) -> list[EntityMention]:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        if key in self._cache:
            return self._cache[key]
        try:
            resp = self.session.post(f"{self.base_url}/ner", json={"text": text},
                                     timeout=self.timeout)
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise BackendUnavailableError(f"remote recognizer unreachable: {exc}") from exc
        body = resp.json()
        payload = body.get("payload", body)
        mentions = []
        for m in payload["mentions"]:
            surface = text[m["start"]:m["end"]]
            mentions.append(EntityMention(
                surface=surface,
                kind=m.get("kind", NAMED_ENTITY),
                start=m["start"],
                end=m["end"],
                canonical=_canonical_entity(surface),
            ))
        self._cache[key] = mentions
        return mentions

    def numbers(self, text: str) -> list[EntityMention]:
        return extract_numbers(text)


def extract_entities(text: str, recognizer=None) -> list[EntityMention]:
    """Named-entity mentions via the given recognizer (builtin by default)."""
    return (recognizer or BuiltinRecognizer()).entities(text)


def extract_numbers(text: str) -> list[EntityMention]:
    """Number mentions: digit groups with optional separators and decimals.

    Canonical forms strip thousands separators ("29,500" -> "29500");
    currency markers are never part of the span.
    """
    out = []
    for m in _NUMBER_RE.finditer(text):
        surface = m.group()
        out.append(EntityMention(
            surface=surface,
            kind=NUMBER,
            start=m.start(),
            end=m.end(),
            canonical=surface.replace(",", ""),
        ))
    return out


def extract_mentions(text: str, recognizer=None) -> list[EntityMention]:
    """Entities and numbers together, ordered by span start."""
    rec = recognizer or BuiltinRecognizer()
    mentions = rec.entities(text) + rec.numbers(text)
    return sorted(mentions, key=lambda m: (m.start, m.end))


def contains_date(text: str) -> bool:
    """Cheap date detector used by the extractive date boost."""
    return bool(_DATE_RE.search(text))
