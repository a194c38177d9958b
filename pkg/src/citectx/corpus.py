"""Document ingestion: sentence segmentation, tokenization, and span indexing.

Reference articles arrive either as raw plaintext (no sentence boundaries)
or as pre-segmented sentence lists with section names.  Either way the
module produces a :class:`Document` whose sentences carry exact character
offsets into the raw text, and a :class:`SpanIndex` over sentence n-gram
spans (n up to ``max_n``, default 3) that downstream retrieval models
score against.

Collection statistics (term frequencies, background language model) are
computed over unigram spans only; n-gram spans merely concatenate
sentence text and would double count every term.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


def _load_wordlist(name: str) -> frozenset[str]:
    text = resources.files("citectx.data").joinpath(name).read_text(encoding="utf-8")
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())


STOPWORDS: frozenset[str] = _load_wordlist("stopwords.txt")
ABBREVIATIONS: frozenset[str] = _load_wordlist("abbreviations.txt")

_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*", re.UNICODE)
_TERMINAL = ".!?"
_CLOSERS = ")\"']}"


@dataclass(frozen=True)
class Sentence:
    index: int
    char_start: int
    char_end: int
    section_index: int
    text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Document:
    id: str
    raw_text: str
    sentences: tuple[Sentence, ...]
    # (section_id, title, first_sentence_index)
    sections: tuple[tuple[str, str, int], ...]


@dataclass(frozen=True)
class Span:
    doc_id: str
    first_sentence: int
    n: int
    char_start: int
    char_end: int
    tokens: tuple[str, ...]

    @property
    def sentence_indices(self) -> range:
        return range(self.first_sentence, self.first_sentence + self.n)

    def overlaps(self, other: "Span") -> bool:
        return (
            self.doc_id == other.doc_id
            and self.char_start < other.char_end
            and other.char_start < self.char_end
        )


@dataclass(frozen=True)
class Citance:
    id: str
    citing_doc_id: str
    reference_doc_id: str
    raw_text: str
    cleaned_text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class GoldAnnotation:
    citance_id: str
    # one list of (start, end) ranges per annotator
    context_ranges: tuple[tuple[tuple[int, int], ...], ...]
    facet_labels: tuple[str, ...]


@dataclass
class Topic:
    id: str
    reference: Document
    citances: list[Citance]
    gold: dict[str, GoldAnnotation]
    gold_summaries: list[str]


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric-run tokens; internal hyphens are kept."""
    return _TOKEN_RE.findall(text.lower())


def remove_stopwords(tokens: list[str]) -> list[str]:
    return [t for t in tokens if t not in STOPWORDS]


def _is_abbreviation(text: str, period_pos: int) -> bool:
    """True when the token ending at ``period_pos`` is a known abbreviation."""
    j = period_pos
    while j > 0 and (text[j - 1].isalnum() or text[j - 1] == "."):
        j -= 1
    word = text[j:period_pos].rstrip(".")
    if not word:
        return False
    return word.lower() in ABBREVIATIONS


def _sentence_breaks(raw_text: str) -> list[int]:
    """End offsets (exclusive) of sentence candidates within raw_text."""
    breaks = []
    i = 0
    n = len(raw_text)
    while i < n:
        ch = raw_text[i]
        if ch in _TERMINAL:
            end = i
            while end + 1 < n and raw_text[end + 1] in _TERMINAL:
                end += 1
            close = end
            while close + 1 < n and raw_text[close + 1] in _CLOSERS:
                close += 1
            nxt = close + 1
            while nxt < n and raw_text[nxt].isspace():
                nxt += 1
            at_eof = nxt >= n
            next_ok = at_eof or raw_text[nxt].isupper() or raw_text[nxt].isdigit()
            abbrev = ch == "." and end == i and _is_abbreviation(raw_text, i)
            if next_ok and not abbrev and (at_eof or nxt > close + 1):
                breaks.append(close + 1)
            i = close + 1
        else:
            i += 1
    if not breaks or breaks[-1] < n:
        breaks.append(n)
    return breaks


def segment_sentences(raw_text: str, section_index: int = 0) -> list[Sentence]:
    """Split raw text into offset-carrying sentences.

    Rule-based: terminal punctuation ends a sentence unless the preceding
    token is a shipped abbreviation, or the following character is
    lowercase.  Whitespace-only input yields an empty list.
    """
    sentences: list[Sentence] = []
    start = 0
    for end in _sentence_breaks(raw_text):
        chunk = raw_text[start:end]
        lead = len(chunk) - len(chunk.lstrip())
        trail = len(chunk) - len(chunk.rstrip())
        s, e = start + lead, end - trail
        if s < e:
            text = raw_text[s:e]
            sentences.append(
                Sentence(
                    index=len(sentences),
                    char_start=s,
                    char_end=e,
                    section_index=section_index,
                    text=text,
                    tokens=tuple(tokenize(text)),
                )
            )
        start = end
    return sentences


def document_from_text(doc_id: str, raw_text: str) -> Document:
    """Build a Document from plaintext; everything lands in one section."""
    sentences = segment_sentences(raw_text)
    sections = ((f"{doc_id}/0", "", 0),) if sentences else ()
    return Document(id=doc_id, raw_text=raw_text, sentences=tuple(sentences), sections=sections)


def document_from_sentences(doc_id: str, items: list[tuple[str, str]]) -> Document:
    """Build a Document from pre-segmented (text, section_title) pairs."""
    raw_parts: list[str] = []
    sentences: list[Sentence] = []
    sections: list[tuple[str, str, int]] = []
    offset = 0
    for text, section in items:
        text = text.strip()
        if not text:
            continue
        if not sections or sections[-1][1] != section:
            sections.append((f"{doc_id}/{len(sections)}", section, len(sentences)))
        start = offset
        raw_parts.append(text)
        offset += len(text) + 1  # sentences joined by single newline
        sentences.append(
            Sentence(
                index=len(sentences),
                char_start=start,
                char_end=start + len(text),
                section_index=len(sections) - 1,
                text=text,
                tokens=tuple(tokenize(text)),
            )
        )
    return Document(
        id=doc_id,
        raw_text="\n".join(raw_parts),
        sentences=tuple(sentences),
        sections=tuple(sections),
    )


@dataclass
class SpanIndex:
    doc: Document
    spans: list[Span]
    # term -> list of (span position in ``spans``, term frequency)
    postings: dict[str, list[tuple[int, int]]]
    doc_freq: dict[str, int]
    collection_tf: dict[str, int]
    total_collection_tokens: int
    span_lengths: list[int]
    avg_unigram_length: float = field(default=0.0)

    @property
    def num_spans(self) -> int:
        return len(self.spans)

    def collection_prob(self, term: str) -> float:
        if self.total_collection_tokens == 0:
            return 0.0
        return self.collection_tf.get(term, 0) / self.total_collection_tokens

    def term_freq(self, term: str, span_ref: int) -> int:
        for ref, tf in self.postings.get(term, ()):
            if ref == span_ref:
                return tf
        return 0

    def vocabulary(self) -> list[str]:
        return sorted(self.collection_tf)


def build_span_index(doc: Document, max_n: int = 3) -> SpanIndex:
    """Index all sentence n-gram spans of ``doc`` for n in 1..max_n.

    Produces Σ_{k=1..max_n} max(0, S−k+1) spans for S sentences.  Postings
    cover every span; collection statistics count unigram spans only.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if not doc.sentences:
        raise ValueError(f"document {doc.id!r} has no sentences")

    spans: list[Span] = []
    for n in range(1, max_n + 1):
        for first in range(0, len(doc.sentences) - n + 1):
            sents = doc.sentences[first : first + n]
            tokens: tuple[str, ...] = tuple(t for s in sents for t in s.tokens)
            spans.append(
                Span(
                    doc_id=doc.id,
                    first_sentence=first,
                    n=n,
                    char_start=sents[0].char_start,
                    char_end=sents[-1].char_end,
                    tokens=tokens,
                )
            )

    postings: dict[str, list[tuple[int, int]]] = {}
    doc_freq: dict[str, int] = {}
    collection_tf: dict[str, int] = {}
    span_lengths: list[int] = []
    total = 0
    for ref, span in enumerate(spans):
        span_lengths.append(len(span.tokens))
        counts: dict[str, int] = {}
        for t in span.tokens:
            counts[t] = counts.get(t, 0) + 1
        for t, tf in counts.items():
            postings.setdefault(t, []).append((ref, tf))
            doc_freq[t] = doc_freq.get(t, 0) + 1
        if span.n == 1:
            total += len(span.tokens)
            for t, tf in counts.items():
                collection_tf[t] = collection_tf.get(t, 0) + tf

    unigram_lengths = [len(s.tokens) for s in spans if s.n == 1]
    avg = sum(unigram_lengths) / len(unigram_lengths) if unigram_lengths else 0.0
    return SpanIndex(
        doc=doc,
        spans=spans,
        postings=postings,
        doc_freq=doc_freq,
        collection_tf=collection_tf,
        total_collection_tokens=total,
        span_lengths=span_lengths,
        avg_unigram_length=avg,
    )


def idf(term: str, index: SpanIndex) -> float:
    """Smoothed inverse span frequency: ln(N / (1 + df))."""
    return math.log(index.num_spans / (1 + index.doc_freq.get(term, 0)))


def load_topic_json(path: str | Path) -> Topic:
    """Load one topic from the canonical JSON format.

    Expected shape::

        {"reference": {"id": ..., "text": ...}                  # plaintext, or
         "reference": {"id": ..., "sentences": [{"text": ..., "section": ...}]},
         "citances": [{"id": ..., "citing_doc_id": ..., "text": ...}],
         "gold": {"contexts": {cid: [[[start, end], ...] per annotator]},
                  "facets": {cid: [label per annotator]},
                  "summaries": [str, ...]}}

    Offsets are 0-based, end-exclusive, over the reference raw text.
    """
    from citectx.contextualizer import clean_citance

    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)

    ref = data["reference"]
    if "sentences" in ref:
        doc = document_from_sentences(
            ref["id"], [(s["text"], s.get("section", "")) for s in ref["sentences"]]
        )
    else:
        doc = document_from_text(ref["id"], ref["text"])

    citances = [
        clean_citance(
            c["text"],
            citance_id=c["id"],
            citing_doc_id=c.get("citing_doc_id", ""),
            reference_doc_id=doc.id,
        )
        for c in data.get("citances", [])
    ]

    gold_block = data.get("gold") or {}
    contexts = gold_block.get("contexts", {})
    facets = gold_block.get("facets", {})
    gold: dict[str, GoldAnnotation] = {}
    for cid in set(contexts) | set(facets):
        ranges = tuple(
            tuple((int(a), int(b)) for a, b in annot) for annot in contexts.get(cid, [])
        )
        for annot in ranges:
            for a, b in annot:
                if not (0 <= a <= b <= len(doc.raw_text)):
                    raise ValueError(
                        f"gold range ({a}, {b}) for citance {cid!r} outside document bounds"
                    )
        gold[cid] = GoldAnnotation(
            citance_id=cid,
            context_ranges=ranges,
            facet_labels=tuple(facets.get(cid, [])),
        )

    return Topic(
        id=path.stem,
        reference=doc,
        citances=citances,
        gold=gold,
        gold_summaries=list(gold_block.get("summaries", [])),
    )


def load_topic_dir(corpus_dir: str | Path) -> list[Topic]:
    """Load every *.json topic file in a directory, sorted by filename."""
    corpus_dir = Path(corpus_dir)
    paths = sorted(corpus_dir.glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no topic JSON files in {corpus_dir}")
    return [load_topic_json(p) for p in paths]
