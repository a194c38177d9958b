"""Faceted extractive summarization.

Retrieved citation contexts are grouped by discourse facet, ranked within
each group by power-iteration centrality on a tf-idf cosine similarity
graph, and selected under a word budget either round-robin across facets
or greedily with a relevance/novelty trade-off (MMR).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from citectx.corpus import Document, Span, tokenize

DEFAULT_DAMPING = 0.85
DEFAULT_SIM_THRESHOLD = 0.1
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
DEFAULT_LAMBDA_MMR = 0.5


@dataclass
class FacetGroup:
    facet: str
    members: list[Span]  # deduplicated by char range


@dataclass
class SummarySentence:
    text: str
    facet: str
    score: float


@dataclass
class Summary:
    selected: list[SummarySentence]
    word_count: int
    budget: int


def group_by_facet(contexts: Sequence[tuple[Span, str]]) -> list[FacetGroup]:
    """Group (span, facet) pairs; spans deduplicate by char range per facet."""
    groups: dict[str, FacetGroup] = {}
    seen: dict[str, set[tuple[int, int]]] = {}
    for span, facet in contexts:
        key = (span.char_start, span.char_end)
        if facet not in groups:
            groups[facet] = FacetGroup(facet=facet, members=[])
            seen[facet] = set()
        if key not in seen[facet]:
            groups[facet].members.append(span)
            seen[facet].add(key)
    # descending group size, ties by label order
    ordered = sorted(groups.values(), key=lambda g: (-len(g.members), g.facet))
    return ordered


def _tfidf_vectors(texts: Sequence[str]) -> list[dict[str, float]]:
    token_lists = [tokenize(t) for t in texts]
    df: dict[str, int] = {}
    for toks in token_lists:
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    n = len(texts)
    vecs = []
    for toks in token_lists:
        counts: dict[str, int] = {}
        for t in toks:
            counts[t] = counts.get(t, 0) + 1
        vecs.append({t: c * (1.0 + math.log(n / df[t])) for t, c in counts.items()})
    return vecs


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(v * b[t] for t, v in a.items() if t in b)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return dot / (na * nb) if na > 0 and nb > 0 else 0.0


def _span_text(span: Span, doc: Document) -> str:
    return doc.raw_text[span.char_start : span.char_end]


def centrality_matrix(
    texts: Sequence[str],
    sim_threshold: float = DEFAULT_SIM_THRESHOLD,
    damping: float = DEFAULT_DAMPING,
) -> np.ndarray:
    """Damped column-stochastic transition matrix of the similarity graph.

    Edges are kept when tf-idf cosine >= sim_threshold; dangling nodes
    jump uniformly.
    """
    n = len(texts)
    vecs = _tfidf_vectors(texts)
    adj = np.zeros((n, n))
    for i in range(n):
        adj[i, i] = 1.0
        for j in range(i + 1, n):
            sim = _cosine(vecs[i], vecs[j])
            if sim >= sim_threshold:
                adj[i, j] = adj[j, i] = sim
    row_sums = adj.sum(axis=1)
    trans = np.zeros((n, n))
    for i in range(n):
        if row_sums[i] > 0:
            trans[i] = adj[i] / row_sums[i]
        else:
            trans[i] = 1.0 / n
    return damping * trans.T + (1.0 - damping) / n


def centrality_rank(
    members: Sequence[Span],
    doc: Document,
    sim_threshold: float = DEFAULT_SIM_THRESHOLD,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[tuple[Span, float]]:
    """Power-iteration centrality scores, sorted descending.

    Scores form a probability distribution; a singleton group gets 1.0.
    Ties keep input member order.
    """
    if not members:
        raise ValueError("centrality_rank needs at least one member")
    n = len(members)
    if n == 1:
        return [(members[0], 1.0)]
    matrix = centrality_matrix(
        [_span_text(s, doc) for s in members], sim_threshold, damping
    )
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = matrix @ p
        nxt = nxt / nxt.sum()
        if np.abs(nxt - p).sum() < tol:
            p = nxt
            break
        p = nxt
    order = sorted(range(n), key=lambda i: (-p[i], i))
    return [(members[i], float(p[i])) for i in order]


def _word_count(text: str) -> int:
    return len(text.split())


def select_iterative(
    ranked_groups: Sequence[tuple[str, list[tuple[Span, float]]]],
    doc: Document,
    budget_words: int,
) -> Summary:
    """Round-robin selection: each facet contributes its next-best sentence.

    Sentences that would exceed the word budget are skipped; selection
    stops once no remaining sentence fits.
    """
    cursors = [0] * len(ranked_groups)
    selected: list[SummarySentence] = []
    seen: set[tuple[int, int]] = set()
    used = 0
    progress = True
    while progress:
        progress = False
        for gi, (facet, ranked) in enumerate(ranked_groups):
            while cursors[gi] < len(ranked):
                span, score = ranked[cursors[gi]]
                cursors[gi] += 1
                key = (span.char_start, span.char_end)
                if key in seen:
                    continue
                text = _span_text(span, doc)
                words = _word_count(text)
                if used + words <= budget_words:
                    selected.append(SummarySentence(text=text, facet=facet, score=score))
                    seen.add(key)
                    used += words
                    progress = True
                    break
                seen.add(key)  # does not fit; never reconsidered
    return Summary(selected=selected, word_count=used, budget=budget_words)


def select_greedy_mmr(
    ranked_groups: Sequence[tuple[str, list[tuple[Span, float]]]],
    doc: Document,
    budget_words: int,
    lambda_mmr: float = DEFAULT_LAMBDA_MMR,
) -> Summary:
    """Greedy MMR selection pooled across facet groups.

    Candidates carry their per-group centrality normalized to [0, 1];
    each step picks argmax of lambda*relevance - (1-lambda)*max tf-idf
    cosine to the already-selected sentences.
    """
    if not (0.0 <= lambda_mmr <= 1.0):
        raise ValueError(f"lambda_mmr must lie in [0, 1], got {lambda_mmr}")
    candidates: list[tuple[str, Span, float]] = []
    seen: set[tuple[int, int]] = set()
    for facet, ranked in ranked_groups:
        if not ranked:
            continue
        top = max(score for _, score in ranked)
        for span, score in ranked:
            key = (span.char_start, span.char_end)
            if key in seen:
                continue
            seen.add(key)
            rel = score / top if top > 0 else 0.0
            candidates.append((facet, span, rel))

    texts = [_span_text(span, doc) for _, span, _ in candidates]
    vecs = _tfidf_vectors(texts) if texts else []

    remaining = list(range(len(candidates)))
    selected_idx: list[int] = []
    selected: list[SummarySentence] = []
    used = 0
    while remaining:
        def mmr(i: int) -> float:
            redundancy = (
                max(_cosine(vecs[i], vecs[j]) for j in selected_idx)
                if selected_idx
                else 0.0
            )
            return lambda_mmr * candidates[i][2] - (1.0 - lambda_mmr) * redundancy

        # stable argmax: earlier candidate wins ties
        best = max(remaining, key=lambda i: (mmr(i), -i))
        remaining.remove(best)
        facet, span, rel = candidates[best]
        words = _word_count(texts[best])
        if used + words <= budget_words:
            selected.append(SummarySentence(text=texts[best], facet=facet, score=rel))
            selected_idx.append(best)
            used += words
    return Summary(selected=selected, word_count=used, budget=budget_words)


def summarize_contexts(
    contexts: Sequence[tuple[Span, str]],
    doc: Document,
    budget_words: int,
    strategy: str = "greedy",
    lambda_mmr: float = DEFAULT_LAMBDA_MMR,
    sim_threshold: float = DEFAULT_SIM_THRESHOLD,
    damping: float = DEFAULT_DAMPING,
) -> Summary:
    """Full selection stage: group by facet, rank by centrality, select."""
    if not contexts:
        return Summary(selected=[], word_count=0, budget=budget_words)
    groups = group_by_facet(contexts)
    ranked_groups = [
        (g.facet, centrality_rank(g.members, doc, sim_threshold, damping))
        for g in groups
    ]
    if strategy == "iterative":
        return select_iterative(ranked_groups, doc, budget_words)
    if strategy == "greedy":
        return select_greedy_mmr(ranked_groups, doc, budget_words, lambda_mmr)
    raise ValueError(f"unknown selection strategy {strategy!r}")
