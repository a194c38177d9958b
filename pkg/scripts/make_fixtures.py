"""Regenerate the checked-in test fixtures (topic JSONs, vectors, lexicons).

Deterministic: running it twice produces identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


# ---------------------------------------------------------------------------
# Topic A: plaintext reference, biomedical flavor, 2 annotators
# ---------------------------------------------------------------------------

TOPIC_A_SENTENCES = [
    "The tumor suppressor pathway controls growth of cells in many tissues.",
    "We found that mir-372 expression promotes tumor growth in cultured cells.",
    "Inhibition of the lats2 protein blocks the suppressor pathway.",
    "We used a luciferase assay to measure pathway activity in each sample.",
    "Samples were collected after treatment and protein levels were measured.",
    "The assay showed a twofold increase of signaling after gene knockdown.",
    "Our results indicate that apoptosis contributes to tumor suppression.",
    "These data imply that loss of apoptosis allows tumor growth.",
    "Future work should examine the network of interactions in this pathway.",
]

TOPIC_A_CITANCES = [
    {
        "id": "a1",
        "citing_doc_id": "citing-a1",
        "text": "Prior work showed that mir-372 promotes tumor growth in cells "
                "(Voorhoeve et al., 2006).",
        "gold_sentence": 1,
        "facets": ["Results", "Results"],
    },
    {
        "id": "a2",
        "citing_doc_id": "citing-a2",
        "text": "The method uses a luciferase assay to measure pathway activity [3].",
        "gold_sentence": 3,
        "facets": ["Method", "Method"],
    },
    {
        "id": "a3",
        "citing_doc_id": "citing-a3",
        "text": "These findings imply a role for apoptosis in tumor suppression "
                "(Smith and Jones, 2004).",
        "gold_sentence": 7,
        "facets": ["Implication", "Results"],
    },
]

TOPIC_A_SUMMARIES = [
    "The tumor suppressor pathway controls growth of cells. mir-372 expression "
    "promotes tumor growth and inhibition of lats2 blocks the pathway. "
    "A luciferase assay measured pathway activity. Apoptosis contributes to "
    "tumor suppression.",
]

# ---------------------------------------------------------------------------
# Topic B: pre-segmented sentences with sections, CL flavor, 1 annotator
# ---------------------------------------------------------------------------

TOPIC_B_SENTENCES = [
    ("We present a model for parsing scientific text with a neural network.", "Introduction"),
    ("Previous parsing systems relied on hand written grammar rules.", "Introduction"),
    ("Our method trains the network on a large corpus of annotated sentences.", "Methods"),
    ("The parser uses word vectors as input features for every token.", "Methods"),
    ("Training runs for ten epochs with a fixed learning rate.", "Methods"),
    ("The model achieves higher accuracy than the grammar baseline.", "Results"),
    ("Accuracy increases when word vectors are trained on domain text.", "Results"),
    ("These results imply that distributed features help parsing accuracy.", "Discussion"),
]

TOPIC_B_CITANCES = [
    {
        "id": "b1",
        "citing_doc_id": "citing-b1",
        "text": "Their parser trains a neural network on annotated sentences "
                "(Lee et al., 2014).",
        "gold_sentence": 2,
        "facets": ["Method"],
    },
    {
        "id": "b2",
        "citing_doc_id": "citing-b2",
        "text": "The model was reported to beat the grammar baseline in accuracy [7,8].",
        "gold_sentence": 5,
        "facets": ["Results"],
    },
]

TOPIC_B_SUMMARIES = [
    "A neural network model for parsing scientific text. The network is trained "
    "on an annotated corpus and uses word vectors as features. It achieves "
    "higher accuracy than a grammar baseline.",
]

# ---------------------------------------------------------------------------
# Embeddings: 20 words, engineered related pairs, unit norm
# ---------------------------------------------------------------------------

VOCAB = [
    "tumor", "cancer", "suppressor", "growth", "increase", "cells", "protein",
    "gene", "expression", "pathway", "signaling", "inhibition", "apoptosis",
    "assay", "measure", "parsing", "parser", "network", "accuracy", "corpus",
]

RELATED_PAIRS = [
    ("tumor", "cancer"),
    ("growth", "increase"),
    ("pathway", "signaling"),
    ("parsing", "parser"),
    ("assay", "measure"),
]

SYNONYMS = [
    ("tumor", "cancer"),
    ("growth", "increase"),
    ("assay", "measure"),
    ("parsing", "parser"),
]

DOMAIN_TERMS = [
    "tumor", "suppressor", "mir-372", "lats2", "apoptosis", "luciferase",
    "pathway", "protein", "gene", "expression",
    "tumor suppressor", "luciferase assay",
]


def make_vectors(dim: int = 8, seed: int = 13) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    vecs = {}
    for word in VOCAB:
        v = rng.normal(size=dim)
        vecs[word] = v / np.linalg.norm(v)
    for a, b in RELATED_PAIRS:
        # pull b close to a so the pair clears a high similarity threshold
        mixed = 0.9 * vecs[a] + 0.1 * vecs[b]
        vecs[b] = mixed / np.linalg.norm(mixed)
    return vecs


def topic_a() -> dict:
    text = " ".join(TOPIC_A_SENTENCES)
    offsets = []
    pos = 0
    for sent in TOPIC_A_SENTENCES:
        start = text.index(sent, pos)
        offsets.append((start, start + len(sent)))
        pos = start + len(sent)
    contexts = {}
    facets = {}
    for cit in TOPIC_A_CITANCES:
        start, end = offsets[cit["gold_sentence"]]
        # two annotators: exact sentence, and the sentence plus a lead-in overlap
        wider = (max(0, start - 10), end)
        contexts[cit["id"]] = [[[start, end]], [list(wider)]]
        facets[cit["id"]] = cit["facets"]
    return {
        "reference": {"id": "ref-a", "text": text},
        "citances": [
            {"id": c["id"], "citing_doc_id": c["citing_doc_id"], "text": c["text"]}
            for c in TOPIC_A_CITANCES
        ],
        "gold": {
            "contexts": {k: [[list(r) for r in annot] for annot in v] for k, v in contexts.items()},
            "facets": facets,
            "summaries": TOPIC_A_SUMMARIES,
        },
    }


def topic_b() -> dict:
    # offsets as produced by the sentence-list loader: joined by "\n"
    offsets = []
    pos = 0
    for sent, _ in TOPIC_B_SENTENCES:
        offsets.append((pos, pos + len(sent)))
        pos += len(sent) + 1
    contexts = {}
    facets = {}
    for cit in TOPIC_B_CITANCES:
        start, end = offsets[cit["gold_sentence"]]
        contexts[cit["id"]] = [[[start, end]]]
        facets[cit["id"]] = cit["facets"]
    return {
        "reference": {
            "id": "ref-b",
            "sentences": [{"text": t, "section": s} for t, s in TOPIC_B_SENTENCES],
        },
        "citances": [
            {"id": c["id"], "citing_doc_id": c["citing_doc_id"], "text": c["text"]}
            for c in TOPIC_B_CITANCES
        ],
        "gold": {
            "contexts": {k: [[list(r) for r in annot] for annot in v] for k, v in contexts.items()},
            "facets": facets,
            "summaries": TOPIC_B_SUMMARIES,
        },
    }


def main() -> None:
    corpus_dir = FIXTURES / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    for name, topic in (("topic_a", topic_a()), ("topic_b", topic_b())):
        with open(corpus_dir / f"{name}.json", "w", encoding="utf-8") as fh:
            json.dump(topic, fh, indent=2, sort_keys=True)
            fh.write("\n")

    vecs = make_vectors()
    with open(FIXTURES / "vectors.txt", "w", encoding="utf-8") as fh:
        fh.write(f"{len(vecs)} 8\n")
        for word in VOCAB:
            fh.write(word + " " + " ".join(f"{x:.8f}" for x in vecs[word]) + "\n")

    with open(FIXTURES / "lexicon.txt", "w", encoding="utf-8") as fh:
        for a, b in SYNONYMS:
            fh.write(f"{a} {b}\n")

    with open(FIXTURES / "domain_lexicon.txt", "w", encoding="utf-8") as fh:
        # tab-separated so multi-word concepts survive; pair consecutive terms
        for a, b in zip(DOMAIN_TERMS, DOMAIN_TERMS[1:] + DOMAIN_TERMS[:1]):
            fh.write(f"{a}\t{b}\n")

    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
