"""Metrics: annotator-weighted character overlap, sentence overlap,
ROUGE-N / ROUGE-SU4, and annotator-weighted facet accuracy.

ROUGE here uses the corpus tokenizer, no stemming, stopwords kept, and
takes the maximum F over multiple references (the official tool's
jackknifing is omitted for determinism); absolute numbers are therefore
not directly comparable to other ROUGE configurations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

from citectx.corpus import tokenize

SKIP_DISTANCE = 4  # ROUGE-SU4: at most 4 intervening words in a skip-bigram


@dataclass(frozen=True)
class OverlapScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class RougeScore:
    variant: str
    precision: float
    recall: float
    f1: float


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def merge_ranges(ranges: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Normalize end-exclusive ranges: sort, drop empties, merge overlaps."""
    cleaned = sorted((a, b) for a, b in ranges if b > a)
    merged: list[tuple[int, int]] = []
    for a, b in cleaned:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _total_length(ranges: Sequence[tuple[int, int]]) -> int:
    return sum(b - a for a, b in ranges)


def _intersection_length(
    xs: Sequence[tuple[int, int]], ys: Sequence[tuple[int, int]]
) -> int:
    total = 0
    for a, b in xs:
        for c, d in ys:
            total += max(0, min(b, d) - max(a, c))
    return total


def char_overlap_prf(
    system_spans: Sequence[tuple[int, int]],
    gold: Sequence[Sequence[tuple[int, int]]],
) -> OverlapScore:
    """Annotator-weighted character precision/recall.

    P = Σ_i |S∩R_i| / (m·|S|), R = Σ_i |S∩R_i| / Σ_i |R_i| for m
    annotators.  An empty system retrieval has precision 0.
    """
    if not gold:
        raise ValueError("need at least one annotator range list")
    s = merge_ranges(system_spans)
    s_len = _total_length(s)
    m = len(gold)
    inter_total = 0
    gold_total = 0
    for annotator in gold:
        r = merge_ranges(annotator)
        inter_total += _intersection_length(s, r)
        gold_total += _total_length(r)
    precision = inter_total / (m * s_len) if s_len > 0 else 0.0
    recall = inter_total / gold_total if gold_total > 0 else 0.0
    return OverlapScore(precision=precision, recall=recall, f1=_f1(precision, recall))


def sentence_overlap_prf(
    system_sentence_ids: set[int] | Sequence[int],
    gold_sentence_ids: set[int] | Sequence[int],
) -> OverlapScore:
    s, g = set(system_sentence_ids), set(gold_sentence_ids)
    inter = len(s & g)
    precision = inter / len(s) if s else 0.0
    recall = inter / len(g) if g else 0.0
    return OverlapScore(precision=precision, recall=recall, f1=_f1(precision, recall))


def _ngram_counts(tokens: Sequence[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i : i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts


def _su4_counts(tokens: Sequence[str]) -> dict[tuple[str, ...], int]:
    """Skip-bigrams with at most SKIP_DISTANCE intervening words, plus unigrams."""
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens)):
        counts[(tokens[i],)] = counts.get((tokens[i],), 0) + 1
        for j in range(i + 1, min(len(tokens), i + SKIP_DISTANCE + 2)):
            g = (tokens[i], tokens[j])
            counts[g] = counts.get(g, 0) + 1
    return counts


def _clipped_overlap(
    cand: dict[tuple[str, ...], int], ref: dict[tuple[str, ...], int]
) -> int:
    return sum(min(c, ref[g]) for g, c in cand.items() if g in ref)


def rouge_score(
    candidate: str, references: Sequence[str], variant: str = "N2"
) -> RougeScore:
    """ROUGE-N (variant "N1"/"N2"/"N3") or ROUGE-SU4 against multiple references.

    Clipped n-gram overlap; multi-reference aggregation takes the
    reference with the best F score.
    """
    variant = variant.upper()
    if variant.startswith("N"):
        n = int(variant[1:])
        counter = lambda toks: _ngram_counts(toks, n)  # noqa: E731
    elif variant == "SU4":
        counter = _su4_counts
    else:
        raise ValueError(f"unknown ROUGE variant {variant!r}")

    cand_tokens = tokenize(candidate)
    cand_counts = counter(cand_tokens)
    if not cand_counts:
        warnings.warn("empty candidate tokenization; ROUGE is 0")
        return RougeScore(variant=variant, precision=0.0, recall=0.0, f1=0.0)

    best = RougeScore(variant=variant, precision=0.0, recall=0.0, f1=0.0)
    any_ref = False
    for ref in references:
        ref_counts = counter(tokenize(ref))
        if not ref_counts:
            continue
        any_ref = True
        overlap = _clipped_overlap(cand_counts, ref_counts)
        p = overlap / sum(cand_counts.values())
        r = overlap / sum(ref_counts.values())
        f = _f1(p, r)
        if f > best.f1 or (f == best.f1 and r > best.recall):
            best = RougeScore(variant=variant, precision=p, recall=r, f1=f)
    if not any_ref:
        warnings.warn("no non-empty references; ROUGE is 0")
    return best


def weighted_facet_accuracy(predicted: str, annotator_labels: Sequence[str]) -> float:
    """Fraction of annotators whose facet label matches the prediction."""
    if not annotator_labels:
        raise ValueError("need at least one annotator label")
    return sum(1 for lab in annotator_labels if lab == predicted) / len(annotator_labels)
