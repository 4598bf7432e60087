import random

import pytest

from factedit.errors import InvalidArgument
from factedit.textcore import (
    MatcherConfig,
    collapse_ws,
    locate,
    normalize,
    sentence_spans,
    token_count,
    tokenize,
)


class TestTokenize:
    def test_empty(self):
        assert tokenize("").tokens == ()

    def test_plain_words(self):
        assert tokenize("Wall Street markets closed lower").surfaces() == \
            ["Wall", "Street", "markets", "closed", "lower"]

    def test_currency_and_percent_single_tokens(self):
        surfaces = tokenize("up 3% at $37.60 per barrel").surfaces()
        assert "3%" in surfaces
        assert "$37.60" in surfaces
        assert surfaces == ["up", "3%", "at", "$37.60", "per", "barrel"]

    @pytest.mark.parametrize("text,expected", [
        ("barrel.", ["barrel", "."]),
        ("$37.60,", ["$37.60", ","]),
        ("30%.", ["30%", "."]),
        ("(hello)", ["(", "hello", ")"]),
        ("it's", ["it's"]),
        ("well-formed", ["well-formed"]),
        ("'quoted'", ["'", "quoted", "'"]),
        ("U.S.", ["U.S", "."]),
        ("3.5", ["3.5"]),
        (".75", [".75"]),
        ("...", [".", ".", "."]),
    ])
    def test_punctuation_peeling(self, text, expected):
        assert tokenize(text).surfaces() == expected

    def test_round_trip_preserves_every_character(self):
        rng = random.Random(7)
        alphabet = "ab cD .,!?$%3-'éß’ \n\t"
        for _ in range(300):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
            tt = tokenize(text)
            rebuilt = []
            pos = 0
            for tok in tt.tokens:
                assert text[tok.char_start:tok.char_end] == tok.surface
                gap = text[pos:tok.char_start]
                assert gap == "" or gap.isspace()
                rebuilt.append(gap)
                rebuilt.append(tok.surface)
                pos = tok.char_end
            rebuilt.append(text[pos:])
            assert "".join(rebuilt) == text

    def test_spans_sorted_non_overlapping(self):
        toks = tokenize("a (b) c, d.e").tokens
        for a, b in zip(toks, toks[1:]):
            assert a.char_end <= b.char_start

    def test_token_count(self):
        assert token_count("one two three") == 3


class TestNormalize:
    def test_identity_mode(self):
        assert normalize("Paris", "none") == "Paris"

    def test_casefold_strip_punct(self):
        assert normalize("PARIS,", "casefold+strip-punct") == "paris"

    def test_empty(self):
        assert normalize("", "casefold") == ""

    def test_unknown_mode(self):
        with pytest.raises(InvalidArgument):
            normalize("x", "upper")

    def test_idempotent_on_fuzzed_unicode(self):
        rng = random.Random(11)
        pool = "AbÇßİǅﬁ ,.!$% éΣςx9"
        for mode in ("none", "casefold", "casefold+strip-punct"):
            for _ in range(400):
                text = "".join(rng.choice(pool) for _ in range(rng.randint(0, 25)))
                once = normalize(text, mode)
                assert normalize(once, mode) == once


class TestLocate:
    def test_simple_hit(self):
        assert locate("throughout 2015", "2015") == [(11, 15)]

    def test_absent(self):
        assert locate("abc", "z") == []

    def test_greedy_non_overlap(self):
        assert locate("aaa", "aa") == [(0, 2)]

    def test_empty_needle(self):
        with pytest.raises(InvalidArgument):
            locate("abc", "")

    def test_casefold_mode(self):
        matcher = MatcherConfig(mode="casefold")
        assert locate("The CAT sat", "cat", matcher) == [(4, 7)]

    def test_strip_punct_mode(self):
        matcher = MatcherConfig(mode="casefold+strip-punct")
        spans = locate("x, a,b y", "AB", matcher)
        assert len(spans) == 1
        s, e = spans[0]
        assert normalize("x, a,b y"[s:e], matcher.mode) == "ab"

    def test_slices_normalize_to_needle(self):
        rng = random.Random(3)
        pool = "aAbB.,  ß"
        matcher = MatcherConfig(mode="casefold")
        for _ in range(300):
            hay = "".join(rng.choice(pool) for _ in range(rng.randint(0, 20)))
            needle = "".join(rng.choice(pool) for _ in range(rng.randint(1, 3)))
            norm_needle = normalize(needle, matcher.mode)
            if not norm_needle:
                continue
            spans = locate(hay, needle, matcher)
            for a, b in zip(spans, spans[1:]):
                assert a[1] <= b[0]
            for s, e in spans:
                assert normalize(hay[s:e], matcher.mode) == norm_needle

    def test_results_match_brute_force_in_exact_mode(self):
        rng = random.Random(5)
        for _ in range(200):
            hay = "".join(rng.choice("abc") for _ in range(rng.randint(0, 15)))
            needle = "".join(rng.choice("abc") for _ in range(rng.randint(1, 3)))
            # Oracle: enumerate all occurrences, then greedy left-to-right.
            occurrences = [i for i in range(len(hay) - len(needle) + 1)
                           if hay[i:i + len(needle)] == needle]
            expected = []
            cursor = -1
            for i in occurrences:
                if i >= cursor:
                    expected.append((i, i + len(needle)))
                    cursor = i + len(needle)
            assert locate(hay, needle) == expected


class TestSentences:
    def test_split_on_terminators(self):
        text = "One here. Two there! Three? four."
        spans = sentence_spans(text)
        assert [text[s:e] for s, e in spans] == \
            ["One here.", "Two there!", "Three?", "four."]

    def test_no_terminator(self):
        assert sentence_spans("no end") == [(0, 6)]

    def test_collapse_ws(self):
        assert collapse_ws("  a \t b\n") == "a b"
