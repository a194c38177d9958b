import random

import numpy as np
import pytest

from citectx.corpus import build_span_index, document_from_sentences
from citectx.summarizer import (
    Summary,
    centrality_matrix,
    centrality_rank,
    group_by_facet,
    select_greedy_mmr,
    select_iterative,
    summarize_contexts,
)


def make_doc(texts, doc_id="sum"):
    doc = document_from_sentences(doc_id, [(t, "s") for t in texts])
    index = build_span_index(doc, max_n=1)
    spans = [s for s in index.spans if s.n == 1]
    return doc, spans


def stationary(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(matrix)
    k = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, k])
    v = np.abs(v)
    return v / v.sum()


_VOCAB = ["alpha", "beta", "gamma", "delta", "omega", "sigma", "tau", "phi"]


def random_texts(rng: random.Random, n: int) -> list[str]:
    return [
        " ".join(rng.choices(_VOCAB, k=rng.randint(3, 6))) + f" filler{i}"
        for i in range(n)
    ]


class TestGroupByFacet:
    def test_order_by_size_then_label(self):
        doc, spans = make_doc(["one two", "three four", "five six", "seven eight"])
        contexts = [
            (spans[0], "Results"),
            (spans[1], "Results"),
            (spans[2], "Method"),
            (spans[3], "Aim"),
        ]
        groups = group_by_facet(contexts)
        assert [(g.facet, len(g.members)) for g in groups] == [
            ("Results", 2),
            ("Aim", 1),
            ("Method", 1),
        ]

    def test_dedup_by_char_range_within_facet(self):
        doc, spans = make_doc(["one two", "three four"])
        groups = group_by_facet([(spans[0], "Aim"), (spans[0], "Aim"), (spans[1], "Aim")])
        assert len(groups) == 1 and len(groups[0].members) == 2

    def test_same_span_kept_in_distinct_facets(self):
        doc, spans = make_doc(["one two"])
        groups = group_by_facet([(spans[0], "Aim"), (spans[0], "Method")])
        assert len(groups) == 2


class TestCentrality:
    def test_singleton_scores_one(self):
        doc, spans = make_doc(["only sentence here"])
        assert centrality_rank(spans, doc) == [(spans[0], 1.0)]

    def test_two_identical_split_evenly(self):
        doc, spans = make_doc(["alpha beta gamma", "alpha beta gamma"])
        ranked = centrality_rank(spans, doc)
        assert [s for _, s in ranked] == pytest.approx([0.5, 0.5])
        # tie keeps input order
        assert ranked[0][0] is spans[0]

    def test_star_hub_ranks_first(self):
        doc, spans = make_doc(
            [
                "alpha beta gamma junction",
                "alpha red car",
                "beta blue boat",
                "gamma green plane",
            ]
        )
        ranked = centrality_rank(spans, doc)
        assert ranked[0][0] is spans[0]
        assert ranked[0][1] > ranked[-1][1]

    def test_matches_dense_eigenvector(self):
        texts = [
            "alpha beta gamma junction",
            "alpha red car",
            "beta blue boat",
            "gamma green plane",
        ]
        doc, spans = make_doc(texts)
        matrix = centrality_matrix(texts)
        expected = {t: p for t, p in zip(texts, stationary(matrix))}
        for span, score in centrality_rank(spans, doc):
            text = doc.raw_text[span.char_start : span.char_end]
            assert score == pytest.approx(expected[text], abs=1e-6)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_distribution_sums_to_one(self, seed):
        rng = random.Random(seed)
        doc, spans = make_doc(random_texts(rng, rng.randint(2, 8)))
        ranked = centrality_rank(spans, doc)
        scores = [s for _, s in ranked]
        assert sum(scores) == pytest.approx(1.0, abs=1e-9)
        assert all(s > 0 for s in scores)
        assert scores == sorted(scores, reverse=True)

    def test_matrix_columns_stochastic(self):
        rng = random.Random(11)
        texts = random_texts(rng, 6)
        matrix = centrality_matrix(texts)
        np.testing.assert_allclose(matrix.sum(axis=0), np.ones(6), atol=1e-12)

    def test_empty_members_rejected(self):
        doc, _ = make_doc(["text"])
        with pytest.raises(ValueError):
            centrality_rank([], doc)


class TestSelectIterative:
    def test_single_group_follows_rank_order(self):
        doc, spans = make_doc(["one two three", "four five six", "seven eight nine"])
        ranked = [("Aim", [(spans[0], 0.5), (spans[1], 0.3), (spans[2], 0.2)])]
        summary = select_iterative(ranked, doc, budget_words=6)
        assert [s.text for s in summary.selected] == ["one two three", "four five six"]
        assert summary.word_count == 6

    def test_budget_below_shortest_sentence(self):
        doc, spans = make_doc(["one two three"])
        summary = select_iterative([("Aim", [(spans[0], 1.0)])], doc, budget_words=2)
        assert summary.selected == [] and summary.word_count == 0

    def test_round_robin_across_groups(self):
        doc, spans = make_doc(
            ["a one", "a two", "b one", "b two"]
        )
        ranked = [
            ("Aim", [(spans[0], 0.6), (spans[1], 0.4)]),
            ("Method", [(spans[2], 0.7), (spans[3], 0.3)]),
        ]
        summary = select_iterative(ranked, doc, budget_words=6)
        assert [s.text for s in summary.selected] == ["a one", "b one", "a two"]

    def test_budget_skip_moves_to_next(self):
        doc, spans = make_doc(["one two three four five", "six seven"])
        ranked = [("Aim", [(spans[0], 0.9), (spans[1], 0.1)])]
        summary = select_iterative(ranked, doc, budget_words=3)
        assert [s.text for s in summary.selected] == ["six seven"]


class TestSelectGreedyMmr:
    def test_lambda_one_is_pure_relevance(self):
        doc, spans = make_doc(["one two", "three four", "five six"])
        ranked = [("Aim", [(spans[1], 0.5), (spans[0], 0.3), (spans[2], 0.2)])]
        summary = select_greedy_mmr(ranked, doc, budget_words=100, lambda_mmr=1.0)
        assert [s.text for s in summary.selected] == [
            "three four",
            "one two",
            "five six",
        ]
        assert summary.selected[0].score == pytest.approx(1.0)  # normalized top

    def test_first_pick_is_global_relevance_argmax(self):
        doc, spans = make_doc(["one two", "three four", "five six", "seven eight"])
        ranked = [
            ("Aim", [(spans[0], 0.2), (spans[1], 0.1)]),
            ("Method", [(spans[2], 0.9), (spans[3], 0.05)]),
        ]
        summary = select_greedy_mmr(ranked, doc, budget_words=4, lambda_mmr=0.5)
        # both group tops normalize to relevance 1.0; the earlier group wins
        assert summary.selected[0].text == "one two"

    def test_redundant_duplicate_deferred(self):
        # two near-identical high-relevance sentences: MMR picks one, then
        # prefers the dissimilar sentence despite lower relevance
        doc, spans = make_doc(
            ["alpha beta gamma", "alpha beta gamma delta", "totally different words"]
        )
        ranked = [
            ("Aim", [(spans[0], 0.5), (spans[1], 0.3), (spans[2], 0.05)])
        ]
        summary = select_greedy_mmr(ranked, doc, budget_words=7, lambda_mmr=0.5)
        assert [s.text for s in summary.selected] == [
            "alpha beta gamma",
            "totally different words",
        ]

    def test_same_span_across_facets_selected_once(self):
        doc, spans = make_doc(["one two", "three four"])
        ranked = [
            ("Aim", [(spans[0], 0.9)]),
            ("Method", [(spans[0], 0.8), (spans[1], 0.2)]),
        ]
        summary = select_greedy_mmr(ranked, doc, budget_words=100, lambda_mmr=1.0)
        assert [s.text for s in summary.selected].count("one two") == 1

    def test_invalid_lambda(self):
        doc, spans = make_doc(["one"])
        with pytest.raises(ValueError):
            select_greedy_mmr([("Aim", [(spans[0], 1.0)])], doc, 10, lambda_mmr=1.5)


class TestSummarizeContexts:
    @pytest.mark.parametrize("strategy", ["iterative", "greedy"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_word_count_within_budget(self, strategy, seed):
        rng = random.Random(seed)
        doc, spans = make_doc(random_texts(rng, 8))
        facets = ["Aim", "Method", "Results"]
        contexts = [(s, rng.choice(facets)) for s in spans]
        budget = rng.randint(3, 25)
        summary = summarize_contexts(contexts, doc, budget, strategy=strategy)
        assert summary.word_count <= budget
        assert summary.word_count == sum(
            len(s.text.split()) for s in summary.selected
        )

    def test_empty_contexts(self):
        doc, _ = make_doc(["text"])
        summary = summarize_contexts([], doc, 10)
        assert summary == Summary(selected=[], word_count=0, budget=10)

    def test_unknown_strategy(self):
        doc, spans = make_doc(["one two"])
        with pytest.raises(ValueError):
            summarize_contexts([(spans[0], "Aim")], doc, 10, strategy="random")

    @pytest.mark.parametrize("strategy", ["iterative", "greedy"])
    def test_deterministic(self, strategy):
        rng = random.Random(5)
        doc, spans = make_doc(random_texts(rng, 6))
        contexts = [(s, ["Aim", "Method"][i % 2]) for i, s in enumerate(spans)]
        a = summarize_contexts(contexts, doc, 15, strategy=strategy)
        b = summarize_contexts(contexts, doc, 15, strategy=strategy)
        assert a == b
