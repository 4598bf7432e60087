import random

import pytest

from factedit.entity import (
    EntityMention,
    detect_extrinsic,
    extract_entities,
    mark,
    mask_slots,
    parse_marked,
    strip_marks,
)
from factedit.errors import (
    InvalidArgument,
    InvalidSpans,
    MalformedMarkup,
    MissingAnnotation,
)
from factedit.textcore import MatcherConfig, locate


def surfaces(mentions):
    return [m.surface for m in mentions]


class TestExtract:
    def test_empty(self):
        assert extract_entities("") == []

    def test_money_and_percent(self, oil_fixture):
        source, _, _ = oil_fixture
        found = {(m.surface, m.etype) for m in extract_entities(source)}
        assert ("3%", "PERCENT") in found
        assert ("$37.60", "MONEY") in found
        assert ("35%", "PERCENT") in found
        assert ("2015", "DATE") in found

    def test_person_cardinal_date(self, hostage_fixture):
        source, _ = hostage_fixture
        found = {(m.surface, m.etype) for m in extract_entities(source)}
        assert ("Kevin Patrick Dawes", "PERSON") in found
        assert ("33", "CARDINAL") in found
        assert ("2012", "DATE") in found
        assert ("Syria", "LOC") in found

    def test_org_keyword(self, hostage_fixture):
        _, summary = hostage_fixture
        found = {(m.surface, m.etype) for m in extract_entities(summary)}
        assert ("US State Department", "ORG") in found

    def test_mentions_sorted_non_overlapping(self, oil_fixture):
        source, summary, _ = oil_fixture
        for text in (source, summary):
            mentions = extract_entities(text)
            for m in mentions:
                assert text[m.start:m.end] == m.surface
            for a, b in zip(mentions, mentions[1:]):
                assert a.end <= b.start

    def test_sentence_initial_lone_capital_skipped(self):
        assert extract_entities("Officials said nothing happened.") == []

    def test_weekday_and_time(self):
        found = {(m.surface, m.etype)
                 for m in extract_entities("It erupted on Saturday at 10:30 am.")}
        assert ("Saturday", "DATE") in found
        assert any(s.startswith("10:30") and t == "TIME" for s, t in found)

    def test_precomputed_backend(self):
        text = "met Zorblatt today"
        ann = [{"surface": "Zorblatt", "type": "ORG", "start": 4, "end": 12}]
        mentions = extract_entities(text, "precomputed", annotations=ann)
        assert mentions == [EntityMention("Zorblatt", "ORG", 4, 12)]

    def test_precomputed_missing(self):
        with pytest.raises(MissingAnnotation):
            extract_entities("x", "precomputed")

    def test_precomputed_bad_span(self):
        with pytest.raises(InvalidSpans):
            extract_entities("abcd", "precomputed",
                             annotations=[{"surface": "zz", "type": "ORG",
                                           "start": 0, "end": 2}])

    def test_gazetteer_overrides_heuristic(self):
        gaz = {"ORG": frozenset({"Wall Street"})}
        found = {(m.surface, m.etype)
                 for m in extract_entities("trouble on Wall Street today",
                                           gazetteer=gaz)}
        assert ("Wall Street", "ORG") in found


class TestDetect:
    def test_fabricated_price_flagged(self, oil_fixture):
        source, summary, _ = oil_fixture
        flagged = surfaces(detect_extrinsic(summary, source))
        assert "$28" in flagged
        assert "2015" not in flagged

    def test_zero_entities(self):
        assert detect_extrinsic("nothing to see here.", "some source") == []

    def test_soundness_and_completeness(self, oil_fixture):
        source, summary, _ = oil_fixture
        matcher = MatcherConfig()
        flagged = set(surfaces(detect_extrinsic(summary, source, matcher)))
        for m in extract_entities(summary):
            grounded = bool(locate(source, m.surface, matcher))
            assert (m.surface in flagged) == (not grounded)

    def test_entity_surface_scope(self):
        matcher = MatcherConfig(scope="source-entity-surfaces")
        source = "Revenue grew 5% in 2019."
        # "2019" is an entity in both; "grew" is mere text so scope matters
        # only for entities. "5%" matches an extracted source surface.
        summary = "Growth hit 5% by 2019."
        assert detect_extrinsic(summary, source, matcher) == []
        summary2 = "Growth hit 6% by 2019."
        assert surfaces(detect_extrinsic(summary2, source, matcher)) == ["6%"]

    def test_casefold_matcher(self):
        matcher = MatcherConfig(mode="casefold")
        summary = "He saw NAIROBI today."
        assert [m.surface for m in detect_extrinsic(summary, "he visited x")] \
            == ["NAIROBI"]
        assert detect_extrinsic(summary, "he visited Nairobi", matcher) == []


class TestMark:
    def test_basic(self):
        marked = mark("oil prices at $28 a barrel", [(14, 17)])
        assert marked.serialize() == "oil prices at <rm> $28 </rm> a barrel"

    def test_nothing_flagged(self):
        marked = mark("unchanged text", [])
        assert marked.serialize() == "unchanged text"

    def test_overlap_rejected(self):
        with pytest.raises(InvalidSpans):
            mark("A B", [(0, 2), (1, 3)])

    def test_token_collision_rejected(self):
        with pytest.raises(InvalidArgument):
            mark("already has <rm> inside", [(0, 7)])

    def test_mention_objects(self):
        m = EntityMention("$28", "MONEY", 14, 17)
        marked = mark("oil prices at $28 a barrel", [m])
        assert marked.removal_spans == ((14, 17),)

    def test_custom_tokens(self):
        marked = mark("drop me now", [(0, 4)], tokens=("[[", "]]"))
        assert marked.serialize() == "[[ drop ]] me now"


class TestStripMarks:
    def test_single_wrapped_span(self):
        text, spans = strip_marks("<rm> $28 </rm>")
        assert text == "$28"
        assert spans == [(0, 3)]

    def test_nested_rejected(self):
        with pytest.raises(MalformedMarkup):
            strip_marks("<rm> a <rm> b </rm>")

    def test_unbalanced_rejected(self):
        with pytest.raises(MalformedMarkup):
            strip_marks("a </rm> b")
        with pytest.raises(MalformedMarkup):
            strip_marks("a <rm> b")

    def test_round_trip_fuzz(self):
        rng = random.Random(23)
        pool = "ab c.,!ß$3% 'é-"
        for _ in range(1000):
            n = rng.randint(1, 60)
            text = "".join(rng.choice(pool) for _ in range(n))
            spans = []
            cursor = 0
            while cursor < len(text) and len(spans) < 4:
                start = rng.randint(cursor, len(text) - 1)
                end = rng.randint(start + 1, min(len(text), start + 8))
                if rng.random() < 0.7:
                    spans.append((start, end))
                cursor = end
            marked = mark(text, spans)
            stripped_text, stripped_spans = strip_marks(marked.serialize())
            assert stripped_text == text
            assert stripped_spans == spans

    def test_parse_marked_round_trip(self):
        marked = mark("pay $44 now", [(4, 7)])
        again = parse_marked(marked.serialize())
        assert again.base == marked.base
        assert again.removal_spans == marked.removal_spans


class TestMaskSlots:
    def test_typed_mask(self):
        mention = EntityMention("Syria", "LOC", 16, 21)
        assert mask_slots("held hostage in Syria", [mention]) == \
            "held hostage in [MASK:LOC]"

    def test_no_mentions(self):
        assert mask_slots("plain text", []) == "plain text"

    def test_repeated_surface(self):
        text = "2012 and 2012"
        mentions = [EntityMention("2012", "DATE", 0, 4),
                    EntityMention("2012", "DATE", 9, 13)]
        masked = mask_slots(text, mentions)
        assert masked == "[MASK:DATE] and [MASK:DATE]"
        assert masked.count("[MASK:") == len(mentions)

    def test_overlap_rejected(self):
        mentions = [EntityMention("ab", "MISC", 0, 2),
                    EntityMention("bc", "MISC", 1, 3)]
        with pytest.raises(InvalidSpans):
            mask_slots("abcd", mentions)
