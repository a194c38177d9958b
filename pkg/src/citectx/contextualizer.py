"""Citance-to-context retrieval.

A citation sentence (citance) is cleaned of citation markers, optionally
reduced to its informative terms (keywords by span-IDF band, noun-phrase
tokens, or domain-lexicon concepts), and run as a query against a span
index under one of several scorers: tf-idf cosine, Okapi BM25, a
Dirichlet-smoothed language model, a translation language model whose
term match is an embedding-similarity sum, an interpolation of the
latter with a synonym-count model, or a supervised feature ranker.
Overlapping retrieved spans are merged before the top-k is returned.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from citectx.corpus import (
    STOPWORDS,
    Citance,
    GoldAnnotation,
    Span,
    SpanIndex,
    idf,
    remove_stopwords,
    tokenize,
)
from citectx.embeddings import (
    EXACT_MATCH_SIMILARITY,
    EmbeddingTable,
    Lexicon,
    SimilarityParams,
    term_similarity,
)

FEATURE_NAMES = (
    "word_match",
    "fuzzy_word_match",
    "embed_alignment",
    "embed_avg_distance",
    "bm25",
    "tfidf_sim",
    "count_sim",
    "char_ngram_tfidf_sim",
    "char_ngram_count_sim",
)

DEFAULT_BM25_K1 = 1.2
DEFAULT_BM25_B = 0.75
DEFAULT_MU = 2000.0
DEFAULT_GAMMA = 0.8
DEFAULT_LAMBDA = 0.5
DEFAULT_NEIGHBOR_LIMIT = 50


class ConfigurationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Citance cleaning
# ---------------------------------------------------------------------------

# "(Voorhoeve et al., 2006)", "(Smith and Jones, 1999; Doe, 2001)"
_PAREN_YEAR = re.compile(r"\(\s*[^()]*\b(?:1[89]|20)\d{2}[a-z]?\b[^()]*\)")
# narrative "Voorhoeve et al. (2006)" / "Smith and Jones (1999)"
_NARRATIVE = re.compile(
    r"[A-Z][\w'-]*\s+(?:et\s+al\.?|and\s+[A-Z][\w'-]*)\s*"
    r"\(\s*(?:1[89]|20)\d{2}[a-z]?\s*\)"
)
# "[12]", "[12,13]", "[3-5]"
_BRACKET_NUM = re.compile(r"\[\s*\d+(?:\s*[,;–-]\s*\d+)*\s*\]")


def clean_citance(
    raw: str,
    citance_id: str = "",
    citing_doc_id: str = "",
    reference_doc_id: str = "",
) -> Citance:
    """Strip citation markers (author-year and bracketed numeric) from a citance."""
    text = _NARRATIVE.sub(" ", raw)
    text = _PAREN_YEAR.sub(" ", text)
    text = _BRACKET_NUM.sub(" ", text)
    text = re.sub(r"\s+", " ", text).strip()
    return Citance(
        id=citance_id,
        citing_doc_id=citing_doc_id,
        reference_doc_id=reference_doc_id,
        raw_text=raw,
        cleaned_text=text,
        tokens=tuple(tokenize(text)),
    )


# ---------------------------------------------------------------------------
# Query reformulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Query:
    terms: tuple[str, ...]
    phrases: tuple[tuple[str, ...], ...]
    method: str  # FULL, KW, NP, DOMAIN


_AUXILIARIES = frozenset(
    "is are was were be been being am has have had do does did "
    "can could will would shall should may might must".split()
)
_VERB_SUFFIXES = ("ed", "ing", "ize", "ise", "ate", "ates", "izes", "ises")
_ADJ_SUFFIXES = ("al", "ive", "ous", "ic", "ary", "ful", "less", "able", "ible")


def _coarse_pos(token: str) -> str:
    if token in STOPWORDS or token in _AUXILIARIES:
        return "FUNC"
    if token.endswith(_VERB_SUFFIXES):
        return "VERB"
    if token.endswith(_ADJ_SUFFIXES):
        return "ADJ"
    return "NOUN"


def looks_like_verb(token: str) -> bool:
    if token in _AUXILIARIES:
        return True
    return token not in STOPWORDS and token.endswith(_VERB_SUFFIXES)


def _runs_to_phrases(runs: list[list[str]]) -> tuple[tuple[str, ...], ...]:
    """Break token runs into units of at most three terms."""
    phrases = []
    for run in runs:
        if len(run) < 2:
            continue
        for i in range(0, len(run), 3):
            chunk = run[i : i + 3]
            if len(chunk) >= 2:
                phrases.append(tuple(chunk))
    return tuple(phrases)


def reduce_query(
    citance: Citance,
    method: str,
    index: SpanIndex | None = None,
    idf_lo: float = 1.9,
    idf_hi: float = math.inf,
    domain_lexicon: Lexicon | None = None,
) -> Query:
    """Reduce a citance to its informative terms.

    KW keeps tokens whose span-IDF falls within [idf_lo, idf_hi]; NP keeps
    tokens inside coarse noun-phrase chunks; DOMAIN keeps tokens and
    phrases found in an expert lexicon.  An empty reduction falls back to
    the full cleaned citance.
    """
    method = method.upper()
    tokens = list(citance.tokens)
    content = remove_stopwords(tokens)

    if method == "FULL":
        return Query(terms=tuple(tokens), phrases=(), method="FULL")

    if method == "KW":
        if index is None:
            raise ConfigurationError("KW query reduction requires a span index")
        kept_mask = [
            t not in STOPWORDS and idf_lo <= idf(t, index) <= idf_hi for t in tokens
        ]
        kept = [t for t, k in zip(tokens, kept_mask) if k]
        runs: list[list[str]] = []
        open_run = False
        for t, k in zip(tokens, kept_mask):
            if k:
                if open_run:
                    runs[-1].append(t)
                else:
                    runs.append([t])
                    open_run = True
            else:
                open_run = False
        if kept:
            return Query(terms=tuple(kept), phrases=_runs_to_phrases(runs), method="KW")

    elif method == "NP":
        tags = [_coarse_pos(t) for t in tokens]
        runs, cur = [], []
        for t, tag in zip(tokens, tags):
            if tag in ("ADJ", "NOUN"):
                cur.append((t, tag))
            else:
                if cur:
                    runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        # a noun phrase must end in a noun
        np_runs = []
        for run in runs:
            while run and run[-1][1] != "NOUN":
                run = run[:-1]
            if run:
                np_runs.append([t for t, _ in run])
        kept = [t for run in np_runs for t in run]
        if kept:
            return Query(terms=tuple(kept), phrases=_runs_to_phrases(np_runs), method="NP")

    elif method == "DOMAIN":
        if domain_lexicon is None:
            raise ConfigurationError("DOMAIN query reduction requires a domain lexicon")
        kept: list[str] = []
        phrases: list[tuple[str, ...]] = []
        i = 0
        while i < len(tokens):
            matched = False
            for size in (3, 2):
                unit = tokens[i : i + size]
                if len(unit) == size and " ".join(unit) in domain_lexicon:
                    phrases.append(tuple(unit))
                    kept.extend(unit)
                    i += size
                    matched = True
                    break
            if not matched:
                if tokens[i] in domain_lexicon:
                    kept.append(tokens[i])
                i += 1
        if kept:
            return Query(terms=tuple(kept), phrases=tuple(phrases), method="DOMAIN")

    else:
        raise ConfigurationError(f"unknown query reduction method {method!r}")

    # fallback: full cleaned citance
    fallback = tuple(content) if content else tuple(tokens)
    return Query(terms=fallback, phrases=(), method="FULL")


# ---------------------------------------------------------------------------
# Unsupervised scorers
# ---------------------------------------------------------------------------

def _counts(tokens: Sequence[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for t in tokens:
        out[t] = out.get(t, 0) + 1
    return out


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


@dataclass(frozen=True)
class BaselineParams:
    k1: float = DEFAULT_BM25_K1
    b: float = DEFAULT_BM25_B
    mu: float = DEFAULT_MU


def score_baseline(
    kind: str,
    query_terms: Sequence[str],
    span_ref: int,
    index: SpanIndex,
    params: BaselineParams | None = None,
) -> float:
    """Score one span under VSM (tf-idf cosine), Okapi BM25, or Dirichlet LM.

    LMD skips query terms that never occur in the collection (their
    background probability is zero for every span, so they carry no
    ranking signal); with mu = 0 an in-collection term missing from the
    span contributes -inf (pure maximum likelihood).
    """
    params = params or BaselineParams()
    kind = kind.lower()
    span = index.spans[span_ref]
    if kind == "vsm":
        q = {t: tf * idf(t, index) for t, tf in _counts(query_terms).items()}
        d = {t: tf * idf(t, index) for t, tf in _counts(span.tokens).items()}
        return _cosine(q, d)
    if kind == "bm25":
        avgdl = sum(index.span_lengths) / len(index.span_lengths)
        dl = index.span_lengths[span_ref]
        n_spans = index.num_spans
        score = 0.0
        for t in query_terms:
            df = index.doc_freq.get(t, 0)
            tf = index.term_freq(t, span_ref)
            if tf == 0:
                continue
            w = math.log(1.0 + (n_spans - df + 0.5) / (df + 0.5))
            score += w * tf * (params.k1 + 1) / (
                tf + params.k1 * (1 - params.b + params.b * dl / avgdl)
            )
        return score
    if kind == "lmd":
        dl = index.span_lengths[span_ref]
        score = 0.0
        for t in query_terms:
            p_c = index.collection_prob(t)
            if p_c == 0.0 and params.mu > 0:
                continue
            num = index.term_freq(t, span_ref) + params.mu * p_c
            den = dl + params.mu
            score += math.log(num / den) if num > 0 and den > 0 else -math.inf
        return score
    raise ValueError(f"unknown baseline scorer {kind!r}")


# ---------------------------------------------------------------------------
# Translation language model (embedding LM and interpolated variant)
# ---------------------------------------------------------------------------

class SimilarityProvider:
    """Term-to-term similarity source for the translation LM."""

    def similarity(self, a: str, b: str) -> float:
        raise NotImplementedError

    def neighbors(self, term: str, vocab: Sequence[str]) -> dict[str, float]:
        """Above-threshold vocabulary neighbors of ``term`` (excluding itself)."""
        raise NotImplementedError


class EmbeddingSimilarityProvider(SimilarityProvider):
    def __init__(
        self,
        table: EmbeddingTable,
        params: SimilarityParams,
        neighbor_limit: int = DEFAULT_NEIGHBOR_LIMIT,
    ):
        self.table = table
        self.params = params
        self.neighbor_limit = neighbor_limit

    def similarity(self, a: str, b: str) -> float:
        return term_similarity(a, b, self.table, self.params)

    def neighbors(self, term: str, vocab: Sequence[str]) -> dict[str, float]:
        out = []
        for w in vocab:
            if w == term:
                continue
            s = self.similarity(term, w)
            if s > 0.0:
                out.append((w, s))
        out.sort(key=lambda ws: (-ws[1], ws[0]))
        return dict(out[: self.neighbor_limit])


class MatrixSimilarityProvider(SimilarityProvider):
    """Similarity lookup backed by an explicit symmetric pair table."""

    def __init__(self, pairs: dict[tuple[str, str], float]):
        self._pairs: dict[tuple[str, str], float] = {}
        for (a, b), v in pairs.items():
            self._pairs[(a, b)] = v
            self._pairs[(b, a)] = v

    def similarity(self, a: str, b: str) -> float:
        return self._pairs.get((a, b), 0.0)

    def neighbors(self, term: str, vocab: Sequence[str]) -> dict[str, float]:
        return {
            w: self._pairs[(term, w)]
            for w in vocab
            if w != term and self._pairs.get((term, w), 0.0) > 0.0
        }


class TranslationScorer:
    """Query-likelihood scorer whose term match is a similarity sum.

    Per-term probability: (Σ_{dj in span} s(q, dj) + mu * p(q|C)) over
    (Σ_{w in V} Σ_{dj in span} s(w, dj) + mu), with s the thresholded
    embedding similarity and exact matches pinned to a large fixed value.
    The vocabulary-wide denominator is assembled from precomputed per-term
    neighbor lists and cached per span.
    """

    def __init__(
        self,
        index: SpanIndex,
        provider: SimilarityProvider,
        mu: float = DEFAULT_MU,
        exact_match: float = EXACT_MATCH_SIMILARITY,
    ):
        self.index = index
        self.provider = provider
        self.mu = mu
        self.exact_match = exact_match
        self._vocab = index.vocabulary()
        self._neighbor_cache: dict[str, dict[str, float]] = {}
        self._denom_contrib: dict[str, float] = {}
        self._span_denom: dict[int, float] = {}

    def _neighbors(self, term: str) -> dict[str, float]:
        if term not in self._neighbor_cache:
            self._neighbor_cache[term] = self.provider.neighbors(term, self._vocab)
        return self._neighbor_cache[term]

    def _contrib(self, term: str) -> float:
        # Σ_{w in V} s(w, term): the exact match plus all above-threshold neighbors
        if term not in self._denom_contrib:
            self._denom_contrib[term] = self.exact_match + sum(
                self._neighbors(term).values()
            )
        return self._denom_contrib[term]

    def span_denominator(self, span_ref: int) -> float:
        if span_ref not in self._span_denom:
            span = self.index.spans[span_ref]
            self._span_denom[span_ref] = sum(self._contrib(t) for t in span.tokens)
        return self._span_denom[span_ref]

    def term_probability(self, term: str, span_ref: int) -> float:
        span = self.index.spans[span_ref]
        num = 0.0
        for dj, count in _counts(span.tokens).items():
            s = self.exact_match if dj == term else self.provider.similarity(term, dj)
            num += count * s
        num += self.mu * self.index.collection_prob(term)
        return num / (self.span_denominator(span_ref) + self.mu)

    def score(self, query_terms: Sequence[str], span_ref: int) -> float:
        total = 0.0
        for t in query_terms:
            p = self.term_probability(t, span_ref)
            total += math.log(p) if p > 0 else -math.inf
        return total


class InterpolatedScorer:
    """Interpolates the translation LM with a synonym-count model.

    The second estimate mirrors the translation LM but replaces the
    similarity with: 1 for identical terms, gamma for lexicon synonyms,
    0 otherwise.
    """

    def __init__(
        self,
        index: SpanIndex,
        provider: SimilarityProvider,
        lexicon: Lexicon,
        mu: float = DEFAULT_MU,
        lambda_: float = DEFAULT_LAMBDA,
        gamma: float = DEFAULT_GAMMA,
        exact_match: float = EXACT_MATCH_SIMILARITY,
    ):
        if not (0.0 <= lambda_ <= 1.0):
            raise ValueError(f"lambda must lie in [0, 1], got {lambda_}")
        if not (0.0 <= gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        self.p1 = TranslationScorer(index, provider, mu=mu, exact_match=exact_match)
        self.index = index
        self.lexicon = lexicon
        self.mu = mu
        self.lambda_ = lambda_
        self.gamma = gamma
        self._vocab_set = set(index.vocabulary())
        self._span_denom2: dict[int, float] = {}

    def _s2(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        if self.lexicon.related(a, b):
            return self.gamma
        return 0.0

    def _denom2(self, span_ref: int) -> float:
        if span_ref not in self._span_denom2:
            total = 0.0
            for dj in self.index.spans[span_ref].tokens:
                syn = sum(1 for w in self.lexicon.neighbors(dj) if w in self._vocab_set)
                total += 1.0 + self.gamma * syn
            self._span_denom2[span_ref] = total
        return self._span_denom2[span_ref]

    def term_probability(self, term: str, span_ref: int) -> float:
        p1 = self.p1.term_probability(term, span_ref)
        num = sum(
            count * self._s2(term, dj)
            for dj, count in _counts(self.index.spans[span_ref].tokens).items()
        )
        num += self.mu * self.index.collection_prob(term)
        p2 = num / (self._denom2(span_ref) + self.mu)
        return self.lambda_ * p1 + (1.0 - self.lambda_) * p2

    def score(self, query_terms: Sequence[str], span_ref: int) -> float:
        total = 0.0
        for t in query_terms:
            p = self.term_probability(t, span_ref)
            total += math.log(p) if p > 0 else -math.inf
        return total


def score_embedding_lm(
    query_terms: Sequence[str],
    span_ref: int,
    index: SpanIndex,
    table: EmbeddingTable,
    params: SimilarityParams,
    mu: float = DEFAULT_MU,
) -> float:
    scorer = TranslationScorer(index, EmbeddingSimilarityProvider(table, params), mu=mu)
    return scorer.score(query_terms, span_ref)


def score_interpolated(
    query_terms: Sequence[str],
    span_ref: int,
    index: SpanIndex,
    table: EmbeddingTable,
    lexicon: Lexicon,
    params: SimilarityParams,
    mu: float = DEFAULT_MU,
    lambda_: float = DEFAULT_LAMBDA,
    gamma: float = DEFAULT_GAMMA,
) -> float:
    scorer = InterpolatedScorer(
        index,
        EmbeddingSimilarityProvider(table, params),
        lexicon,
        mu=mu,
        lambda_=lambda_,
        gamma=gamma,
    )
    return scorer.score(query_terms, span_ref)


# ---------------------------------------------------------------------------
# Supervised ranker
# ---------------------------------------------------------------------------

def embedding_alignment(
    s1_tokens: Sequence[str],
    s2_tokens: Sequence[str],
    table: EmbeddingTable | None = None,
    params: SimilarityParams | None = None,
    sim_fn: Callable[[str, str], float] | None = None,
) -> float:
    """Average best-match similarity of each first-sentence term in the second.

    Asymmetric by definition: Σ_{w in S1} max_{v in S2} s(w, v) / |S1|.
    """
    if not s1_tokens:
        raise ValueError("embedding alignment needs a non-empty first sentence")
    if sim_fn is None:
        if table is None or params is None:
            raise ValueError("either sim_fn or (table, params) must be given")
        sim_fn = lambda a, b: term_similarity(a, b, table, params)  # noqa: E731
    if not s2_tokens:
        return 0.0
    total = sum(max(sim_fn(w, v) for v in s2_tokens) for w in s1_tokens)
    return total / len(s1_tokens)


def char_ngrams(text: str, n: int = 3) -> list[str]:
    text = text.lower()
    if len(text) < n:
        return [text] if text else []
    return [text[i : i + n] for i in range(len(text) - n + 1)]


@dataclass(frozen=True)
class PairFeatures:
    word_match: float
    fuzzy_word_match: float
    embed_alignment: float
    embed_avg_distance: float
    bm25: float
    tfidf_sim: float
    count_sim: float
    char_ngram_tfidf_sim: float
    char_ngram_count_sim: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)


class PairFeatureExtractor:
    """Computes the 9 citance/span relatedness features.

    Char 3-gram document frequencies are precomputed over the unigram
    spans of the index so tf-idf weighting of character n-grams is stable
    across calls.
    """

    def __init__(
        self,
        index: SpanIndex,
        table: EmbeddingTable,
        params: SimilarityParams,
        baseline_params: BaselineParams | None = None,
    ):
        self.index = index
        self.table = table
        self.params = params
        self.baseline_params = baseline_params or BaselineParams()
        self._char_df: dict[str, int] = {}
        unigram_spans = [s for s in index.spans if s.n == 1]
        self._n_char_docs = len(unigram_spans)
        for s in unigram_spans:
            text = index.doc.raw_text[s.char_start : s.char_end]
            for g in set(char_ngrams(text)):
                self._char_df[g] = self._char_df.get(g, 0) + 1

    def _char_idf(self, gram: str) -> float:
        return math.log(self._n_char_docs / (1 + self._char_df.get(gram, 0)))

    def extract(self, citance: Citance, span_ref: int) -> PairFeatures:
        span = self.index.spans[span_ref]
        span_text = self.index.doc.raw_text[span.char_start : span.char_end]
        c_tokens = list(citance.tokens)
        s_tokens = list(span.tokens)
        s_token_set = set(s_tokens)

        if c_tokens:
            word_match = sum(1 for t in c_tokens if t in s_token_set) / len(c_tokens)
            fuzzy = (
                sum(self._best_fuzzy(t, s_tokens) for t in c_tokens) / len(c_tokens)
                if s_tokens
                else 0.0
            )
            align = embedding_alignment(c_tokens, s_tokens, self.table, self.params)
        else:
            word_match = fuzzy = align = 0.0

        avg_dist = self._avg_embedding_similarity(c_tokens, s_tokens)
        bm25 = score_baseline("bm25", c_tokens, span_ref, self.index, self.baseline_params)

        cq = _counts(c_tokens)
        cd = _counts(s_tokens)
        tfidf_sim = _cosine(
            {t: tf * idf(t, self.index) for t, tf in cq.items()},
            {t: tf * idf(t, self.index) for t, tf in cd.items()},
        )
        count_sim = _cosine({k: float(v) for k, v in cq.items()},
                            {k: float(v) for k, v in cd.items()})

        gq = _counts(char_ngrams(citance.cleaned_text))
        gd = _counts(char_ngrams(span_text))
        char_tfidf_sim = _cosine(
            {g: tf * self._char_idf(g) for g, tf in gq.items()},
            {g: tf * self._char_idf(g) for g, tf in gd.items()},
        )
        char_count_sim = _cosine({k: float(v) for k, v in gq.items()},
                                 {k: float(v) for k, v in gd.items()})

        return PairFeatures(
            word_match=word_match,
            fuzzy_word_match=fuzzy,
            embed_alignment=align,
            embed_avg_distance=avg_dist,
            bm25=bm25,
            tfidf_sim=tfidf_sim,
            count_sim=count_sim,
            char_ngram_tfidf_sim=char_tfidf_sim,
            char_ngram_count_sim=char_count_sim,
        )

    @staticmethod
    def _best_fuzzy(token: str, candidates: Sequence[str]) -> float:
        grams = set(char_ngrams(token))
        best = 0.0
        for c in candidates:
            cg = set(char_ngrams(c))
            union = grams | cg
            if union:
                best = max(best, len(grams & cg) / len(union))
        return best

    def _avg_embedding_similarity(
        self, c_tokens: Sequence[str], s_tokens: Sequence[str]
    ) -> float:
        cv = [self.table.get(t) for t in c_tokens if t in self.table]
        sv = [self.table.get(t) for t in s_tokens if t in self.table]
        if not cv or not sv:
            return 0.0
        a = np.mean(cv, axis=0)
        b = np.mean(sv, axis=0)
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0 or nb == 0:
            return 0.0
        return max(0.0, float(a @ b) / (na * nb))


def extract_pair_features(
    citance: Citance,
    span_ref: int,
    index: SpanIndex,
    table: EmbeddingTable,
    params: SimilarityParams,
) -> PairFeatures:
    return PairFeatureExtractor(index, table, params).extract(citance, span_ref)


@dataclass
class RankerModel:
    weights: np.ndarray  # one weight per feature, FEATURE_NAMES order
    bias: float
    trained: bool = True

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"bias={float(self.bias)!r}\n")
            for name, w in zip(FEATURE_NAMES, self.weights):
                fh.write(f"{name}={float(w)!r}\n")

    @classmethod
    def load(cls, path) -> "RankerModel":
        values: dict[str, float] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if "=" in line:
                    key, _, val = line.partition("=")
                    values[key.strip()] = float(val)
        weights = np.array([values[n] for n in FEATURE_NAMES], dtype=np.float64)
        return cls(weights=weights, bias=values["bias"])


def train_ranker(
    examples: Sequence[tuple[PairFeatures, bool]], seed: int = 0
) -> RankerModel:
    """Fit a logistic-loss linear ranker on (features, is_gold) pairs."""
    from sklearn.linear_model import LogisticRegression

    labels = {is_gold for _, is_gold in examples}
    if labels != {True, False}:
        raise ValueError("ranker training needs both positive and negative examples")
    x = np.stack([f.as_array() for f, _ in examples])
    y = np.array([1 if g else 0 for _, g in examples])
    clf = LogisticRegression(solver="liblinear", random_state=seed)
    clf.fit(x, y)
    return RankerModel(weights=clf.coef_[0].copy(), bias=float(clf.intercept_[0]))


def score_supervised(model: RankerModel, features: PairFeatures) -> float:
    z = float(model.weights @ features.as_array()) + model.bias
    return 1.0 / (1.0 + math.exp(-z))


def build_ranker_examples(
    citances: Sequence[Citance],
    gold: dict[str, GoldAnnotation],
    index: SpanIndex,
    extractor: PairFeatureExtractor,
    negatives_per_positive: int = 5,
    seed: int = 0,
) -> list[tuple[PairFeatures, bool]]:
    """Build training pairs: gold-overlapping unigram spans are positives,
    plus a seeded random sample of non-gold unigram spans as negatives."""
    rng = random.Random(seed)
    unigram_refs = [i for i, s in enumerate(index.spans) if s.n == 1]
    examples: list[tuple[PairFeatures, bool]] = []
    for citance in citances:
        annotation = gold.get(citance.id)
        if annotation is None or not annotation.context_ranges:
            continue
        ranges = [r for annot in annotation.context_ranges for r in annot]
        positives = [
            ref
            for ref in unigram_refs
            if any(
                index.spans[ref].char_start < b and a < index.spans[ref].char_end
                for a, b in ranges
            )
        ]
        negatives_pool = [r for r in unigram_refs if r not in set(positives)]
        for ref in positives:
            examples.append((extractor.extract(citance, ref), True))
        n_neg = min(len(negatives_pool), negatives_per_positive * len(positives))
        for ref in rng.sample(negatives_pool, n_neg):
            examples.append((extractor.extract(citance, ref), False))
    return examples


# ---------------------------------------------------------------------------
# Ranking, merging, retrieval
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContextEntry:
    span_ref: int
    span: Span
    score: float


@dataclass
class RankedContext:
    entries: list[ContextEntry]
    model: str


def rank_all_spans(
    score_fn: Callable[[int], float], index: SpanIndex, model: str
) -> RankedContext:
    """Score every span; ties break toward the earlier span in index order."""
    scored = [(ref, score_fn(ref)) for ref in range(index.num_spans)]
    scored.sort(key=lambda rs: (-rs[1], rs[0]))
    entries = [ContextEntry(ref, index.spans[ref], s) for ref, s in scored]
    return RankedContext(entries=entries, model=model)


def merge_overlapping(ranked: RankedContext) -> RankedContext:
    """Resolve overlapping retrieved spans.

    For an overlapping pair, the larger span absorbs the smaller one when
    it scores higher; otherwise the tighter span wins and the larger is
    dropped.  Output order (score-descending) is preserved.
    """
    entries = list(ranked.entries)
    changed = True
    while changed:
        changed = False
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                a, b = entries[i], entries[j]
                if not a.span.overlaps(b.span):
                    continue
                len_a = a.span.char_end - a.span.char_start
                len_b = b.span.char_end - b.span.char_start
                if len_a >= len_b:
                    larger, smaller = a, b
                else:
                    larger, smaller = b, a
                drop = smaller if larger.score > smaller.score else larger
                entries.remove(drop)
                changed = True
                break
            if changed:
                break
    return RankedContext(entries=entries, model=ranked.model)


def retrieve_contexts(
    citance: Citance,
    index: SpanIndex,
    score_fn: Callable[[int], float],
    k: int = 3,
    model: str = "",
) -> RankedContext:
    """Top-k overlap-free contexts for one citance under a span scorer."""
    if index.num_spans == 0:
        raise ValueError("cannot retrieve from an empty index")
    ranked = rank_all_spans(score_fn, index, model)
    merged = merge_overlapping(ranked)
    return RankedContext(entries=merged.entries[:k], model=model)
