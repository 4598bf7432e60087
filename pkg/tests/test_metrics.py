import random
from functools import lru_cache

import pytest

from factedit.errors import AlignmentError, EmptyCorpus, InvalidArgument
from factedit.metrics import (
    align_pairs,
    build_report,
    clean_reference,
    edit_percent,
    entity_precision,
    entity_recall,
    r1_clean,
    rouge_l,
    rouge_n,
    rouge_tokens,
)
from factedit.textcore import MatcherConfig


# Independent oracle: quadratic n-gram matching with consumption flags.
def naive_rouge_n(hyp_tokens, ref_tokens, n):
    hyp_ngrams = [tuple(hyp_tokens[i:i + n]) for i in range(len(hyp_tokens) - n + 1)]
    ref_ngrams = [tuple(ref_tokens[i:i + n]) for i in range(len(ref_tokens) - n + 1)]
    used = [False] * len(ref_ngrams)
    matches = 0
    for gram in hyp_ngrams:
        for j, other in enumerate(ref_ngrams):
            if not used[j] and other == gram:
                used[j] = True
                matches += 1
                break
    p = matches / len(hyp_ngrams) if hyp_ngrams else 0.0
    r = matches / len(ref_ngrams) if ref_ngrams else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


# Independent oracle: plain recursive LCS with memoization.
def naive_lcs(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def naive_rouge_l(hyp_tokens, ref_tokens):
    lcs = naive_lcs(tuple(hyp_tokens), tuple(ref_tokens))
    p = lcs / len(hyp_tokens) if hyp_tokens else 0.0
    r = lcs / len(ref_tokens) if ref_tokens else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


VOCAB = ["the", "cat", "sat", "on", "mat", "dog", "ran", "far", "blue", "sky"]


def random_texts(count, seed, max_len=15):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(0, max_len)
        out.append(" ".join(rng.choice(VOCAB) for _ in range(n)))
    return out


class TestRouge:
    def test_hand_fixture(self):
        score = rouge_n("the cat sat", "the cat", 1)
        p, r, f = score.scaled()
        assert p == 66.67
        assert r == 100.0
        assert f == 80.0

    def test_identity(self):
        for text in ("a b c", "one two"):
            assert rouge_n(text, text, 1).scaled() == (100.0, 100.0, 100.0)
            assert rouge_n(text, text, 2).scaled() == (100.0, 100.0, 100.0)
            assert rouge_l(text, text).scaled() == (100.0, 100.0, 100.0)

    def test_disjoint(self):
        assert rouge_n("aa bb", "cc dd", 1).f1 == 0.0

    def test_lcs_fixture(self):
        score = rouge_l("a c b", "a b c")
        assert score.scaled() == (66.67, 66.67, 66.67)

    def test_empty(self):
        assert rouge_n("", "", 1).f1 == 0.0
        assert rouge_l("", "a b").f1 == 0.0

    def test_bad_n(self):
        with pytest.raises(InvalidArgument):
            rouge_n("a", "a", 3)

    def test_swap_symmetry(self):
        hyp, ref = "the cat sat on the mat", "the dog sat"
        for fn in (lambda h, r: rouge_n(h, r, 1),
                   lambda h, r: rouge_n(h, r, 2),
                   rouge_l):
            a = fn(hyp, ref)
            b = fn(ref, hyp)
            assert abs(a.precision - b.recall) < 1e-12
            assert abs(a.recall - b.precision) < 1e-12

    def test_matches_oracles_on_random_texts(self):
        texts = random_texts(2000, seed=97)
        for hyp, ref in zip(texts[::2], texts[1::2]):
            ht, rt = rouge_tokens(hyp), rouge_tokens(ref)
            for n in (1, 2):
                got = rouge_n(hyp, ref, n)
                want = naive_rouge_n(ht, rt, n)
                assert abs(got.precision - want[0]) < 1e-9
                assert abs(got.recall - want[1]) < 1e-9
                assert abs(got.f1 - want[2]) < 1e-9
            got = rouge_l(hyp, ref)
            want = naive_rouge_l(ht, rt)
            assert abs(got.precision - want[0]) < 1e-9
            assert abs(got.recall - want[1]) < 1e-9
            assert abs(got.f1 - want[2]) < 1e-9

    def test_casefolded(self):
        assert rouge_n("The Cat", "the cat", 1).f1 == 1.0

    def test_summary_level_identity(self):
        text = "First part here. Second bit there."
        assert rouge_l(text, text, summary_level=True).scaled() == \
            (100.0, 100.0, 100.0)

    def test_stemming_flag(self):
        assert rouge_n("running", "run", 1, stem=False).f1 == 0.0
        # The light stemmer strips the gerund suffix.
        assert rouge_n("running", "runn", 1, stem=True).f1 == 1.0


class TestEntityMetrics:
    def test_precision_half(self, oil_fixture):
        source, _, _ = oil_fixture
        summary = "prices hit $28 during 2015."
        assert entity_precision(summary, source) == 50.0

    def test_vacuous_precision(self):
        assert entity_precision("no entities here.", "source") == 100.0

    def test_all_grounded(self, oil_fixture):
        source, _, _ = oil_fixture
        assert entity_precision("it was down 35% in 2015.", source) == 100.0

    def test_recall(self):
        reference = "held in Syria by the US."
        assert entity_recall(reference, "freed in Syria today.") == 50.0
        assert entity_recall(reference, reference) == 100.0
        assert entity_recall("no mentions.", "whatever") == 100.0

    def test_precision_iff_no_extrinsic(self, oil_fixture):
        from factedit.entity import detect_extrinsic

        source, summary, _ = oil_fixture
        assert (entity_precision(summary, source) == 100.0) == \
            (detect_extrinsic(summary, source) == [])


class TestR1Clean:
    def test_no_deletion_equals_rouge1(self, oil_fixture):
        source, _, _ = oil_fixture
        ref = "markets fell 35% in 2015."
        hyp = "markets dropped in 2015."
        clean = r1_clean(hyp, ref, source)
        plain = rouge_n(hyp, ref, 1)
        assert clean == plain

    def test_ungrounded_entity_removed(self, oil_fixture):
        source, _, _ = oil_fixture
        assert clean_reference("prices at $28 a barrel", source) == \
            "prices at a barrel"

    def test_all_ungrounded_reference(self):
        score = r1_clean("some words", "$99", "empty source")
        assert score.f1 == 0.0


class TestEditPercent:
    def test_no_edits(self):
        assert edit_percent([("a", "a"), ("b", "b")]) == 0.0

    def test_three_of_four(self):
        pairs = [("a", "a"), ("b", "x"), ("c", "y"), ("d", "z")]
        assert edit_percent(pairs) == 75.0

    def test_whitespace_invariant(self):
        assert edit_percent([("a  b", "a b")]) == 0.0

    def test_order_invariant(self):
        pairs = [("a", "x"), ("b", "b"), ("c", "z")]
        assert edit_percent(pairs) == edit_percent(list(reversed(pairs)))

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            edit_percent([])

    def test_align_pairs(self):
        a = [("1", "x"), ("2", "y")]
        b = [("2", "y2"), ("1", "x1")]
        assert align_pairs(a, b) == [("x", "x1"), ("y", "y2")]
        with pytest.raises(AlignmentError):
            align_pairs(a, [("1", "x")])


class TestBuildReport:
    def _row(self, rid, value, changed=True):
        return {"id": rid, "e_p_src": value, "e_r_ref": value, "r1": value,
                "r2": value, "rl": value, "r1_c": value, "changed": changed}

    def test_singleton(self):
        report = build_report([self._row("a", 50.0)])
        assert report.aggregates["e_p_src"] == 50.0
        assert report.aggregates["edit_percent"] == 100.0

    def test_means_match_hand_arithmetic(self):
        rows = [self._row("a", 10.0), self._row("b", 20.0, changed=False),
                self._row("c", 40.0)]
        report = build_report(rows)
        for key in ("e_p_src", "e_r_ref", "r1", "r2", "rl", "r1_c"):
            assert abs(report.aggregates[key] - (10.0 + 20.0 + 40.0) / 3) < 1e-9
        assert abs(report.aggregates["edit_percent"] - 200.0 / 3) < 1e-9

    def test_external_passthrough(self):
        report = build_report([self._row("a", 1.0)], {"bs_p_src": 43.03})
        assert report.external == {"bs_p_src": 43.03}
        assert "d_arc" not in report.external

    def test_unknown_external_rejected(self):
        with pytest.raises(InvalidArgument):
            build_report([self._row("a", 1.0)], {"meteor": 1.0})

    def test_empty_rows(self):
        with pytest.raises(EmptyCorpus):
            build_report([])

    def test_unknown_changed_disables_edit_percent(self):
        row = self._row("a", 5.0)
        row["changed"] = None
        assert build_report([row]).aggregates["edit_percent"] is None

    def test_tsv_layout(self):
        report = build_report([self._row("a", 50.0)], {"cola": 98.61})
        header, row = report.tsv("mine").strip().split("\n")
        assert header.split("\t") == [
            "Model", "E-P_src", "BS-P_src", "D_arc", "QAFE", "E-R_ref",
            "BS-F1_ref", "R1", "R2", "RL", "R1-c", "CoLA", "Edit%"]
        cells = row.split("\t")
        assert cells[0] == "mine"
        assert cells[1] == "50.00"
        assert cells[2] == "-"
        assert cells[12] == "100.00"
