import itertools
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from citectx.corpus import tokenize
from citectx.evaluation import (
    SKIP_DISTANCE,
    char_overlap_prf,
    merge_ranges,
    rouge_score,
    sentence_overlap_prf,
    weighted_facet_accuracy,
)

ranges_strategy = st.lists(
    st.tuples(st.integers(0, 60), st.integers(0, 60)).map(
        lambda ab: (min(ab), max(ab))
    ),
    max_size=6,
)


def char_set(ranges):
    out = set()
    for a, b in ranges:
        out.update(range(a, b))
    return out


class TestMergeRanges:
    def test_overlapping_merge(self):
        assert merge_ranges([(5, 10), (8, 12), (20, 25)]) == [(5, 12), (20, 25)]

    def test_adjacent_merge(self):
        assert merge_ranges([(0, 5), (5, 9)]) == [(0, 9)]

    def test_empty_ranges_dropped(self):
        assert merge_ranges([(3, 3), (7, 5)]) == []

    @given(ranges_strategy)
    def test_preserves_char_set(self, ranges):
        merged = merge_ranges(ranges)
        assert char_set(merged) == char_set(ranges)
        for (a, b), (c, d) in zip(merged, merged[1:]):
            assert b < c


class TestCharOverlap:
    def test_offset_window_example(self):
        score = char_overlap_prf([(100, 151)], [[(120, 171)]])
        assert score.precision == pytest.approx(31 / 51)
        assert score.recall == pytest.approx(31 / 51)

    def test_identical_perfect(self):
        score = char_overlap_prf([(10, 40)], [[(10, 40)]])
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_disjoint_zero(self):
        score = char_overlap_prf([(0, 10)], [[(50, 60)]])
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_empty_system_zero_precision(self):
        score = char_overlap_prf([], [[(0, 10)]])
        assert score.precision == 0.0 and score.recall == 0.0

    def test_two_annotators_weighting(self):
        # S covers annotator 1 exactly and half of annotator 2
        score = char_overlap_prf([(0, 10)], [[(0, 10)], [(5, 25)]])
        assert score.precision == pytest.approx((10 + 5) / (2 * 10))
        assert score.recall == pytest.approx((10 + 5) / (10 + 20))

    def test_annotators_required(self):
        with pytest.raises(ValueError):
            char_overlap_prf([(0, 5)], [])

    @given(ranges_strategy, st.lists(ranges_strategy, min_size=1, max_size=3))
    def test_matches_char_set_oracle(self, system, gold):
        score = char_overlap_prf(system, gold)
        s = char_set(system)
        inter = sum(len(s & char_set(r)) for r in gold)
        gold_total = sum(len(char_set(r)) for r in gold)
        exp_p = inter / (len(gold) * len(s)) if s else 0.0
        exp_r = inter / gold_total if gold_total else 0.0
        assert score.precision == pytest.approx(exp_p)
        assert score.recall == pytest.approx(exp_r)


class TestSentenceOverlap:
    def test_two_of_three(self):
        score = sentence_overlap_prf({1, 2, 3}, {2, 3, 4})
        assert score.precision == pytest.approx(2 / 3)
        assert score.recall == pytest.approx(2 / 3)
        assert score.f1 == pytest.approx(2 / 3)

    def test_empty_sides(self):
        assert sentence_overlap_prf(set(), {1}).precision == 0.0
        assert sentence_overlap_prf({1}, set()).recall == 0.0

    def test_duplicates_ignored(self):
        a = sentence_overlap_prf([1, 1, 2], [2, 2, 3])
        b = sentence_overlap_prf({1, 2}, {2, 3})
        assert a == b


def naive_rouge(candidate, reference, variant):
    """Counter-based reference implementation used as an oracle."""
    c, r = tokenize(candidate), tokenize(reference)

    def grams(tokens):
        if variant.startswith("N"):
            n = int(variant[1:])
            return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
        pairs = Counter((t,) for t in tokens)
        for i, j in itertools.combinations(range(len(tokens)), 2):
            if j - i <= SKIP_DISTANCE + 1:
                pairs[(tokens[i], tokens[j])] += 1
        return pairs

    gc, gr = grams(c), grams(r)
    overlap = sum((gc & gr).values())
    p = overlap / sum(gc.values()) if gc else 0.0
    r_ = overlap / sum(gr.values()) if gr else 0.0
    f = 2 * p * r_ / (p + r_) if p + r_ else 0.0
    return p, r_, f


class TestRouge:
    def test_bigram_reorder(self):
        score = rouge_score("a b c d", ["a b d c"], variant="N2")
        assert score.recall == pytest.approx(1 / 3)
        assert score.precision == pytest.approx(1 / 3)

    @pytest.mark.parametrize("variant", ["N1", "N2", "N3", "SU4"])
    def test_identical_is_one(self, variant):
        text = "the assay confirmed strong tumor suppression in treated cells"
        score = rouge_score(text, [text], variant=variant)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_su4_includes_unigrams(self):
        # no shared bigram at any skip distance, but shared unigrams
        score = rouge_score("alpha", ["beta alpha"], variant="SU4")
        assert score.recall > 0.0

    def test_su4_skip_window(self):
        # "a ... b" with 5 intervening words is outside the window
        cand = "a b"
        near = "a x1 x2 x3 x4 b"  # 4 intervening: counted
        far = "a x1 x2 x3 x4 x5 b"  # 5 intervening: not counted
        s_near = rouge_score(cand, [near], variant="SU4")
        s_far = rouge_score(cand, [far], variant="SU4")
        assert s_near.recall > s_far.recall

    def test_max_f_over_references(self):
        cand = "a b c"
        good, bad = "a b c", "x y z"
        both = rouge_score(cand, [bad, good], variant="N1")
        assert both.f1 == 1.0

    def test_empty_candidate_warns(self):
        with pytest.warns(UserWarning):
            score = rouge_score("", ["a b"], variant="N1")
        assert score.f1 == 0.0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            rouge_score("a", ["a"], variant="L")

    words = st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=12)

    @given(words, words)
    @pytest.mark.parametrize("variant", ["N1", "N2", "SU4"])
    def test_matches_naive_counter_oracle(self, variant, cand, ref):
        candidate, reference = " ".join(cand), " ".join(ref)
        exp_p, exp_r, exp_f = naive_rouge(candidate, reference, variant)
        if variant == "N2" and (len(cand) < 2 or len(ref) < 2):
            return  # no n-grams on either side; warning path tested above
        import warnings as _w

        with _w.catch_warnings():
            _w.simplefilter("ignore")
            score = rouge_score(candidate, [reference], variant=variant)
        assert score.precision == pytest.approx(exp_p)
        assert score.recall == pytest.approx(exp_r)
        assert score.f1 == pytest.approx(exp_f)


class TestWeightedFacetAccuracy:
    def test_three_of_four(self):
        assert weighted_facet_accuracy(
            "Method", ["Method", "Method", "Method", "Results"]
        ) == pytest.approx(0.75)

    def test_unanimous(self):
        assert weighted_facet_accuracy("Aim", ["Aim", "Aim"]) == 1.0

    def test_no_match(self):
        assert weighted_facet_accuracy("Aim", ["Results"]) == 0.0

    def test_permutation_invariant(self):
        labels = ["Aim", "Method", "Aim", "Results"]
        base = weighted_facet_accuracy("Aim", labels)
        for perm in itertools.permutations(labels):
            assert weighted_facet_accuracy("Aim", list(perm)) == base

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            weighted_facet_accuracy("Aim", [])
