import random

import pytest

from veridict.errors import BackendUnavailableError
from veridict.recognizers import (
    NAMED_ENTITY,
    NUMBER,
    BuiltinRecognizer,
    RemoteRecognizer,
    contains_date,
    extract_entities,
    extract_mentions,
    extract_numbers,
)


@pytest.fixture
def rec():
    return BuiltinRecognizer()


class TestBuiltinEntities:
    def test_honorific_prefixed_judge_name(self, rec):
        text = "the Honorable Aiyar, N. Chandrasekhara entered a judgment."
        surfaces = [m.surface for m in rec.entities(text)]
        assert "Aiyar, N. Chandrasekhara" in surfaces

    def test_empty(self, rec):
        assert rec.entities("") == []

    def test_no_capitals(self, rec):
        assert rec.entities("the quick brown fox") == []

    def test_sentence_initial_single_word_excluded(self, rec):
        text = "The court agreed. Witnesses came from Bombay yesterday."
        canonicals = {m.canonical for m in rec.entities(text)}
        assert "bombay" in canonicals
        assert "the" not in canonicals
        assert "witnesses" not in canonicals

    def test_multi_token_run_kept_at_sentence_start(self, rec):
        text = "W.H. King filed the appeal."
        surfaces = [m.surface for m in rec.entities(text)]
        assert "W.H. King" in surfaces

    def test_acronym(self, rec):
        text = "the agency SOCA recovered the amount."
        assert [m.surface for m in rec.entities(text)] == ["SOCA"]

    def test_comma_joins_only_before_initials(self, rec):
        text = "He visited London, Paris and Berlin lately."
        surfaces = [m.surface for m in rec.entities(text)]
        assert "London" in surfaces and "Paris" in surfaces and "Berlin" in surfaces
        assert all("," not in s for s in surfaces)

    def test_spans_match_surface(self, rec):
        text = ('On February 1, 1949, the Honorable Aiyar, N. Chandrasekhara of '
                'the Supreme Court of India held that Mr. King owed Rs. 29,500 '
                'under Section 420. "SOCA" objected.')
        for m in extract_mentions(text, rec):
            assert text[m.start:m.end] == m.surface
            assert m.canonical

    def test_deterministic(self, rec):
        text = "Judge Mahajan, Mehr Chand of Delhi heard Mr. Nand Lal on May 3, 1951."
        assert rec.entities(text) == rec.entities(text)

    def test_concatenation_commutes_with_blank_line_join(self, rec):
        a = "The appellant W.H. King lived in Bombay. He sued Mulchand Raichand."
        b = "Justice Bose, Vivian heard the matter at Delhi in 1951."
        joined = a + "\n\n" + b
        offset = len(a) + 2
        expected = rec.entities(a) + [
            type(m)(surface=m.surface, kind=m.kind, start=m.start + offset,
                    end=m.end + offset, canonical=m.canonical)
            for m in rec.entities(b)
        ]
        assert rec.entities(joined) == expected


class TestNumbers:
    def test_rule_trace(self):
        canonicals = {m.canonical for m in
                      extract_numbers("Rs 29,500 under Section 387")}
        assert canonicals == {"29500", "387"}

    def test_none(self):
        assert extract_numbers("no numerals here") == []

    def test_decimal(self):
        mentions = extract_numbers("3.5 per cent")
        assert [m.canonical for m in mentions] == ["3.5"]

    def test_trailing_sentence_period_not_decimal(self):
        mentions = extract_numbers("It happened in 1955. Later it rained.")
        assert [m.canonical for m in mentions] == ["1955"]

    def test_currency_symbol_not_in_span(self):
        mentions = extract_numbers("paid £4.5 then $2.5 more")
        assert [m.surface for m in mentions] == ["4.5", "2.5"]

    def test_kind_and_span(self):
        text = "fine of Rs. 1,05,000 imposed"
        for m in extract_numbers(text):
            assert m.kind == NUMBER
            assert text[m.start:m.end] == m.surface


class TestMentionProperties:
    def test_fuzzed_span_invariant(self, rec):
        rng = random.Random(13)
        vocab = ["The", "court", "Mr.", "King", "Rs.", "29,500", "ruled",
                 "on", "May", "3,", "1951.", "IN", "Bombay", "and", "won."]
        for _ in range(50):
            text = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 30)))
            for m in extract_mentions(text, rec):
                assert text[m.start:m.end] == m.surface
                assert m.canonical

    def test_extract_entities_default_recognizer(self):
        mentions = extract_entities("Mr. King went to Bombay.")
        assert {m.kind for m in mentions} == {NAMED_ENTITY}


class TestDates:
    def test_positive(self):
        assert contains_date("executed on March 24, 1955 in court")
        assert contains_date("filed 12/03/1987 by the clerk")
        assert contains_date("the year 1949 was eventful")

    def test_negative(self):
        assert not contains_date("no temporal reference at all")


class TestRemoteRecognizer:
    def test_parses_envelope_and_caches(self, stub_server):
        base_url, handler = stub_server
        text = "Mr. King went home."
        handler.responses["/ner"] = [(200, {
            "model_id": "stub", "elapsed_ms": 1.0,
            "payload": {"mentions": [
                {"surface": "King", "start": 4, "end": 8, "kind": "named_entity"},
            ]},
        }, {})]
        remote = RemoteRecognizer(base_url)
        mentions = remote.entities(text)
        assert [m.surface for m in mentions] == ["King"]
        assert mentions[0].canonical == "king"
        again = remote.entities(text)
        assert again == mentions
        assert len([r for r in handler.requests if r[0] == "/ner"]) == 1

    def test_unreachable(self):
        remote = RemoteRecognizer("http://127.0.0.1:9", timeout=0.2)
        with pytest.raises(BackendUnavailableError):
            remote.entities("text")

    def test_numbers_stay_builtin(self, stub_server):
        base_url, _ = stub_server
        remote = RemoteRecognizer(base_url)
        assert [m.canonical for m in remote.numbers("Rs 29,500")] == ["29500"]
